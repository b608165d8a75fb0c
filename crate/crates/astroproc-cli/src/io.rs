//! Raster file formats.
//!
//! - `Pgm8`: NetPBM grayscale, binary `P5` and ASCII `P2`, maxval 255.
//!   Writing quantizes by `round(clamp(v, 0, 1) * 255)`; reading divides
//!   by 255.
//! - `F32Raw`: ASCII header line `IMGF32 <width> <height>\n` followed by
//!   `width * height` little-endian IEEE-754 32-bit floats, row-major.
//!   Lossless round trip for values representable in 32 bits.
//!
//! Parse failures report the byte offset of the defect.

use std::fs;
use std::path::Path;

use astroproc::image::Image;

use crate::{Error, Result};

/// Supported on-disk raster encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RasterFormat {
    Pgm8,
    F32Raw,
}

impl RasterFormat {
    /// Infer from a file extension: `.pgm` is PGM, `.f32` is raw float.
    pub fn from_extension(path: &Path) -> Option<RasterFormat> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("pgm") => Some(RasterFormat::Pgm8),
            Some("f32") => Some(RasterFormat::F32Raw),
            _ => None,
        }
    }
}

fn parse_err<T>(offset: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse { offset, message: message.into() })
}

/// Read an image, detecting the format from the file magic.
pub fn read_image(path: &Path) -> Result<Image> {
    let bytes = fs::read(path)?;
    decode_image(&bytes)
}

/// Decode an in-memory raster.
pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    if bytes.starts_with(b"P5") || bytes.starts_with(b"P2") {
        decode_pgm(bytes)
    } else if bytes.starts_with(b"IMGF32") {
        decode_f32(bytes)
    } else {
        parse_err(0, "unsupported magic (expected P5, P2, or IMGF32)")
    }
}

/// Write an image in the requested format.
pub fn write_image(path: &Path, img: &Image, format: RasterFormat) -> Result<()> {
    let bytes = match format {
        RasterFormat::Pgm8 => encode_pgm_binary(img),
        RasterFormat::F32Raw => encode_f32(img),
    };
    fs::write(path, bytes)?;
    Ok(())
}

/// Quantize to the 8-bit PGM code value.
pub fn quantize_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Binary P5 encoding.
pub fn encode_pgm_binary(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.data().iter().map(|&v| quantize_u8(v)));
    out
}

/// ASCII P2 encoding of the same quantized pixels.
pub fn encode_pgm_ascii(img: &Image) -> Vec<u8> {
    let mut out = format!("P2\n{} {}\n255\n", img.width(), img.height());
    for y in 0..img.height() {
        let row: Vec<String> = (0..img.width())
            .map(|x| quantize_u8(img.get(x, y)).to_string())
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out.into_bytes()
}

/// F32Raw encoding.
pub fn encode_f32(img: &Image) -> Vec<u8> {
    let mut out = format!("IMGF32 {} {}\n", img.width(), img.height()).into_bytes();
    for &v in img.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    /// Skip whitespace and `#` comments, returning the next token and its
    /// starting offset.
    fn token(&mut self) -> Result<(usize, &'a [u8])> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        if self.pos >= self.bytes.len() {
            return parse_err(self.bytes.len(), "unexpected end of header");
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        Ok((start, &self.bytes[start..self.pos]))
    }

    fn number(&mut self, what: &str) -> Result<(usize, usize)> {
        let (off, tok) = self.token()?;
        let text = std::str::from_utf8(tok)
            .map_err(|_| Error::Parse { offset: off, message: format!("{what} is not ASCII") })?;
        let value: usize = text
            .parse()
            .map_err(|_| Error::Parse { offset: off, message: format!("invalid {what}: {text:?}") })?;
        Ok((off, value))
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    let binary = bytes.starts_with(b"P5");
    let mut cur = Cursor { bytes, pos: 2 };
    let (w_off, width) = cur.number("width")?;
    let (_, height) = cur.number("height")?;
    let (max_off, maxval) = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return parse_err(w_off, format!("degenerate dimensions {width}x{height}"));
    }
    if maxval != 255 {
        return parse_err(max_off, format!("unsupported maxval {maxval} (only 255)"));
    }
    let n = width * height;
    let mut data = Vec::with_capacity(n);
    if binary {
        // Exactly one whitespace byte separates the header from the payload.
        if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
            return parse_err(cur.pos, "missing whitespace after maxval");
        }
        let payload = &bytes[cur.pos + 1..];
        if payload.len() < n {
            return parse_err(
                bytes.len(),
                format!("truncated payload: expected {n} bytes, found {}", payload.len()),
            );
        }
        if payload.len() > n {
            return parse_err(cur.pos + 1 + n, format!("trailing bytes after {n}-byte payload"));
        }
        data.extend(payload.iter().map(|&b| f64::from(b) / 255.0));
    } else {
        for i in 0..n {
            let (off, value) = cur.number("sample")?;
            if value > 255 {
                return parse_err(off, format!("sample {value} exceeds maxval (pixel {i})"));
            }
            data.push(value as f64 / 255.0);
        }
        while cur.pos < bytes.len() {
            if !bytes[cur.pos].is_ascii_whitespace() {
                return parse_err(cur.pos, "trailing bytes after final sample");
            }
            cur.pos += 1;
        }
    }
    Ok(Image::from_vec(width, height, data)?)
}

fn decode_f32(bytes: &[u8]) -> Result<Image> {
    let header_end = match bytes.iter().position(|&b| b == b'\n') {
        Some(p) => p,
        None => return parse_err(bytes.len(), "missing newline after IMGF32 header"),
    };
    let header = std::str::from_utf8(&bytes[..header_end])
        .map_err(|_| Error::Parse { offset: 0, message: "header is not ASCII".to_string() })?;
    let mut parts = header.split_ascii_whitespace();
    let magic = parts.next().unwrap_or("");
    if magic != "IMGF32" {
        return parse_err(0, format!("unsupported magic {magic:?}"));
    }
    let width: usize = match parts.next().map(str::parse) {
        Some(Ok(v)) => v,
        _ => return parse_err(7, "invalid width in IMGF32 header"),
    };
    let height: usize = match parts.next().map(str::parse) {
        Some(Ok(v)) => v,
        _ => return parse_err(7, "invalid height in IMGF32 header"),
    };
    if parts.next().is_some() {
        return parse_err(header_end, "unexpected extra header fields");
    }
    if width == 0 || height == 0 {
        return parse_err(7, format!("degenerate dimensions {width}x{height}"));
    }
    let payload = &bytes[header_end + 1..];
    let n = width * height;
    if payload.len() != n * 4 {
        return parse_err(
            header_end + 1 + payload.len().min(n * 4),
            format!("payload is {} bytes, expected {}", payload.len(), n * 4),
        );
    }
    let data: Vec<f64> = payload
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect();
    Ok(Image::from_vec(width, height, data)?)
}

/// HSV-encoded angle visualization as binary PPM (`P6`): hue from the angle
/// in `(-pi, pi]`, full saturation, value 1 (or scaled by `value` if given).
pub fn encode_ppm_hsv(angles: &Image, value: Option<&Image>) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", angles.width(), angles.height()).into_bytes();
    for (i, &a) in angles.data().iter().enumerate() {
        let hue = (a + std::f64::consts::PI) / (2.0 * std::f64::consts::PI) * 360.0;
        let v = value.map_or(1.0, |m| m.data()[i].clamp(0.0, 1.0));
        let (r, g, b) = hsv_to_rgb(hue % 360.0, 1.0, v);
        out.push(quantize_u8(r));
        out.push(quantize_u8(g));
        out.push(quantize_u8(b));
    }
    out
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> (f64, f64, f64) {
    let c = v * s;
    let hp = h / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    (r + m, g + m, b + m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f32_round_trip_is_bitwise() {
        let img = Image::from_fn(5, 3, |x, y| (x as f64 * 0.37 + y as f64 * 1.21) - 1.0).unwrap();
        let bytes = encode_f32(&img);
        let back = decode_image(&bytes).unwrap();
        for (a, b) in img.data().iter().zip(back.data()) {
            assert_eq!((*a as f32).to_bits(), (*b as f32).to_bits());
        }
    }

    #[test]
    fn p5_header_layout() {
        let bytes = b"P5\n4 2\n255\n\x00\x40\x80\xff\x10\x20\x30\x40";
        let img = decode_image(bytes).unwrap();
        assert_eq!((img.width(), img.height()), (4, 2));
        assert!((img.get(0, 0) - 0.0).abs() < 1e-12);
        assert!((img.get(3, 0) - 1.0).abs() < 1e-12);
        assert!((img.get(1, 1) - 32.0 / 255.0).abs() < 1e-12);
    }

    #[test]
    fn p2_and_p5_parse_identically() {
        let img = Image::from_fn(7, 4, |x, y| ((x * 41 + y * 17) % 256) as f64 / 255.0).unwrap();
        let a = decode_image(&encode_pgm_binary(&img)).unwrap();
        let b = decode_image(&encode_pgm_ascii(&img)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parse_errors_carry_offsets() {
        match decode_image(b"P7\n1 1\n255\n\x00") {
            Err(Error::Parse { offset: 0, .. }) => {}
            other => panic!("expected magic error, got {other:?}"),
        }
        match decode_image(b"P5\n4 2\n255\n\x00\x01") {
            Err(Error::Parse { offset, message }) => {
                assert!(message.contains("truncated"), "{message}");
                assert!(offset > 0);
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
        match decode_image(b"P5\n2 2\n65535\n\x00\x00\x00\x00") {
            Err(Error::Parse { offset, message }) => {
                assert!(message.contains("maxval"));
                assert_eq!(offset, 7);
            }
            other => panic!("expected maxval error, got {other:?}"),
        }
        match decode_image(b"IMGF32 3 3\n\x00\x00") {
            Err(Error::Parse { message, .. }) => assert!(message.contains("payload")),
            other => panic!("expected payload error, got {other:?}"),
        }
    }

    #[test]
    fn pgm_comments_are_skipped() {
        let bytes = b"P2\n# size\n2 1\n# depth\n255\n128 255\n";
        let img = decode_image(bytes).unwrap();
        assert_eq!((img.width(), img.height()), (2, 1));
        assert!((img.get(1, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quantization_convention() {
        assert_eq!(quantize_u8(-0.2), 0);
        assert_eq!(quantize_u8(0.0), 0);
        assert_eq!(quantize_u8(0.5), 128);
        assert_eq!(quantize_u8(1.0), 255);
        assert_eq!(quantize_u8(7.0), 255);
    }
}
