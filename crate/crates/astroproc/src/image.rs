//! Core image buffer, boundary handling, and spatial convolution.
//!
//! Pixels are `f64` throughout, row-major, conventionally in `[0, 1]` but not
//! enforced except where an operation states so. Images are immutable once
//! built and safe to share across threads; every operation here is a pure
//! function of its inputs with a fixed per-pixel summation order, so results
//! are bitwise identical regardless of thread count.

use crate::error::{Error, Result};

/// 2-D scalar field of pixel intensities, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    /// Zero-filled image.
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::dimension(format!(
                "image dimensions must be >= 1, got {width}x{height}"
            )));
        }
        Ok(Image { width, height, data: vec![0.0; width * height] })
    }

    /// Wrap an existing row-major buffer.
    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::dimension(format!(
                "image dimensions must be >= 1, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::dimension(format!(
                "buffer length {} does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Image { width, height, data })
    }

    /// Build an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut img = Image::new(width, height)?;
        for y in 0..height {
            for x in 0..width {
                img.data[y * width + x] = f(x, y);
            }
        }
        Ok(img)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x] = v;
    }

    /// Sample with out-of-range coordinates resolved by `mode`.
    #[inline]
    pub fn sample(&self, x: isize, y: isize, mode: BoundaryMode) -> f64 {
        let (sx, ok_x) = resolve(x, self.width, mode);
        let (sy, ok_y) = resolve(y, self.height, mode);
        if ok_x && ok_y {
            self.data[sy * self.width + sx]
        } else {
            0.0
        }
    }

    pub fn same_dims(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// True when every pixel is finite (no NaN/Inf).
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// (min, max) over all pixels.
    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.data {
            if v < lo {
                lo = v;
            }
            if v > hi {
                hi = v;
            }
        }
        (lo, hi)
    }

    /// New image with `f` applied per pixel.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Affine rescale to `[0, 1]`; a constant image maps to all `0.5`.
    pub fn rescale_unit(&self) -> Image {
        let (lo, hi) = self.min_max();
        if hi > lo {
            let inv = 1.0 / (hi - lo);
            self.map(|v| (v - lo) * inv)
        } else {
            self.map(|_| 0.5)
        }
    }
}

/// Boundary extension used when a stencil reaches outside the image.
///
/// `Reflect` mirrors without repeating the edge pixel (index -1 maps to 1);
/// it is the default since it avoids halo artifacts in gradients and
/// patch-based filters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryMode {
    #[default]
    Reflect,
    Replicate,
    Zero,
}

/// Map coordinate `p` into `[0, n)` under `mode`.
/// Returns `(index, in_domain)`; `in_domain` is false only for `Zero`.
#[inline]
fn resolve(p: isize, n: usize, mode: BoundaryMode) -> (usize, bool) {
    let n = n as isize;
    if p >= 0 && p < n {
        return (p as usize, true);
    }
    match mode {
        BoundaryMode::Zero => (0, false),
        BoundaryMode::Replicate => (p.clamp(0, n - 1) as usize, true),
        BoundaryMode::Reflect => {
            if n == 1 {
                return (0, true);
            }
            // Mirror with period 2(n-1), edge pixel not repeated.
            let period = 2 * (n - 1);
            let mut q = p.rem_euclid(period);
            if q >= n {
                q = period - q;
            }
            (q as usize, true)
        }
    }
}

/// Small 2-D weight array with odd dimensions; the anchor is the center.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    width: usize,
    height: usize,
    weights: Vec<f64>,
}

impl Kernel {
    pub fn from_vec(width: usize, height: usize, weights: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || width % 2 == 0 || height % 2 == 0 {
            return Err(Error::dimension(format!(
                "kernel dimensions must be odd and >= 1, got {width}x{height}"
            )));
        }
        if weights.len() != width * height {
            return Err(Error::dimension(format!(
                "kernel buffer length {} does not match {width}x{height}",
                weights.len()
            )));
        }
        if !weights.iter().all(|w| w.is_finite()) {
            return Err(Error::contract("kernel weights must be finite"));
        }
        Ok(Kernel { width, height, weights })
    }

    /// Outer product `col ⊗ row`, for checking separable paths.
    pub fn outer(row: &[f64], col: &[f64]) -> Result<Self> {
        let mut weights = Vec::with_capacity(row.len() * col.len());
        for &c in col {
            for &r in row {
                weights.push(c * r);
            }
        }
        Kernel::from_vec(row.len(), col.len(), weights)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.weights[y * self.width + x]
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Transposed copy.
    pub fn transpose(&self) -> Kernel {
        let mut weights = Vec::with_capacity(self.weights.len());
        for x in 0..self.width {
            for y in 0..self.height {
                weights.push(self.get(x, y));
            }
        }
        Kernel { width: self.height, height: self.width, weights }
    }

    /// Copy scaled to unit l2 norm. A zero kernel is returned unchanged.
    pub fn normalized_l2(&self) -> Kernel {
        let norm = self.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        if norm == 0.0 {
            return self.clone();
        }
        let inv = 1.0 / norm;
        Kernel {
            width: self.width,
            height: self.height,
            weights: self.weights.iter().map(|w| w * inv).collect(),
        }
    }
}

/// Complex-valued 2-D field (frequency domain), stored as separate
/// real/imaginary planes.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    width: usize,
    height: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl ComplexField {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::dimension(format!(
                "field dimensions must be >= 1, got {width}x{height}"
            )));
        }
        Ok(ComplexField { width, height, re: vec![0.0; width * height], im: vec![0.0; width * height] })
    }

    pub fn from_parts(width: usize, height: usize, re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        if re.len() != width * height || im.len() != width * height {
            return Err(Error::dimension("plane length does not match dimensions".to_string()));
        }
        if width == 0 || height == 0 {
            return Err(Error::dimension("field dimensions must be >= 1".to_string()));
        }
        Ok(ComplexField { width, height, re, im })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn re(&self) -> &[f64] {
        &self.re
    }

    pub fn im(&self) -> &[f64] {
        &self.im
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> (f64, f64) {
        let i = y * self.width + x;
        (self.re[i], self.im[i])
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, re: f64, im: f64) {
        let i = y * self.width + x;
        self.re[i] = re;
        self.im[i] = im;
    }

    /// |z|^2 per bin.
    pub fn power(&self) -> Image {
        let data = self
            .re
            .iter()
            .zip(&self.im)
            .map(|(r, i)| r * r + i * i)
            .collect();
        Image { width: self.width, height: self.height, data }
    }
}

/// True 2-D convolution (kernel flipped, not correlation). Output size equals
/// input size; pixels whose stencil leaves the image are resolved by `mode`.
pub fn convolve2d(img: &Image, k: &Kernel, mode: BoundaryMode) -> Result<Image> {
    if k.width() > img.width() || k.height() > img.height() {
        return Err(Error::dimension(format!(
            "kernel {}x{} larger than image {}x{}",
            k.width(),
            k.height(),
            img.width(),
            img.height()
        )));
    }
    let cx = (k.width() / 2) as isize;
    let cy = (k.height() / 2) as isize;
    let mut out = Image::new(img.width(), img.height())?;
    for y in 0..img.height() as isize {
        for x in 0..img.width() as isize {
            let mut acc = 0.0;
            for ky in 0..k.height() as isize {
                let ty = ky - cy;
                for kx in 0..k.width() as isize {
                    let tx = kx - cx;
                    acc += k.get(kx as usize, ky as usize) * img.sample(x - tx, y - ty, mode);
                }
            }
            out.set(x as usize, y as usize, acc);
        }
    }
    Ok(out)
}

/// Two-pass convolution with the separable kernel `col ⊗ row`. Identical
/// (within 1e-12) to [`convolve2d`] with the outer-product kernel.
pub fn separable_convolve(img: &Image, row: &[f64], col: &[f64], mode: BoundaryMode) -> Result<Image> {
    if row.is_empty() || row.len() % 2 == 0 || col.is_empty() || col.len() % 2 == 0 {
        return Err(Error::contract(format!(
            "separable weights must be odd-length, got {} and {}",
            row.len(),
            col.len()
        )));
    }
    if row.len() > img.width() || col.len() > img.height() {
        return Err(Error::dimension("separable weights larger than image".to_string()));
    }
    let cr = (row.len() / 2) as isize;
    let mut horiz = Image::new(img.width(), img.height())?;
    for y in 0..img.height() as isize {
        for x in 0..img.width() as isize {
            let mut acc = 0.0;
            for (i, &w) in row.iter().enumerate() {
                let t = i as isize - cr;
                acc += w * img.sample(x - t, y, mode);
            }
            horiz.set(x as usize, y as usize, acc);
        }
    }
    let cc = (col.len() / 2) as isize;
    let mut out = Image::new(img.width(), img.height())?;
    for y in 0..img.height() as isize {
        for x in 0..img.width() as isize {
            let mut acc = 0.0;
            for (i, &w) in col.iter().enumerate() {
                let t = i as isize - cc;
                acc += w * horiz.sample(x, y - t, mode);
            }
            out.set(x as usize, y as usize, acc);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img_from(vals: &[&[f64]]) -> Image {
        let h = vals.len();
        let w = vals[0].len();
        Image::from_vec(w, h, vals.iter().flat_map(|r| r.iter().copied()).collect()).unwrap()
    }

    #[test]
    fn rejects_degenerate_shapes() {
        assert!(Image::new(0, 3).is_err());
        assert!(Image::from_vec(2, 2, vec![0.0; 3]).is_err());
        assert!(Kernel::from_vec(2, 3, vec![0.0; 6]).is_err());
        assert!(Kernel::from_vec(3, 3, vec![f64::NAN; 9]).is_err());
    }

    #[test]
    fn reflect_mirrors_without_edge_repeat() {
        let img = Image::from_vec(4, 1, vec![10.0, 20.0, 30.0, 40.0]).unwrap();
        assert_eq!(img.sample(-1, 0, BoundaryMode::Reflect), 20.0);
        assert_eq!(img.sample(-2, 0, BoundaryMode::Reflect), 30.0);
        assert_eq!(img.sample(4, 0, BoundaryMode::Reflect), 30.0);
        assert_eq!(img.sample(5, 0, BoundaryMode::Reflect), 20.0);
        assert_eq!(img.sample(-1, 0, BoundaryMode::Replicate), 10.0);
        assert_eq!(img.sample(9, 0, BoundaryMode::Replicate), 40.0);
        assert_eq!(img.sample(-1, 0, BoundaryMode::Zero), 0.0);
    }

    #[test]
    fn identity_kernel_is_identity() {
        let img = img_from(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let k = Kernel::from_vec(1, 1, vec![1.0]).unwrap();
        let out = convolve2d(&img, &k, BoundaryMode::Reflect).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn constant_image_scales_by_kernel_sum() {
        let img = Image::from_vec(3, 3, vec![0.7; 9]).unwrap();
        let k = Kernel::from_vec(3, 3, (1..=9).map(|v| v as f64).collect()).unwrap();
        let out = convolve2d(&img, &k, BoundaryMode::Reflect).unwrap();
        for &v in out.data() {
            assert!((v - 0.7 * 45.0).abs() < 1e-12);
        }
    }

    #[test]
    fn convolution_flips_the_kernel() {
        // Weight 1 at kernel offset t = (+1, 0): out(x, y) = I(x-1, y).
        let img = img_from(&[&[1.0, 2.0, 3.0]]);
        let k = Kernel::from_vec(3, 1, vec![0.0, 0.0, 1.0]).unwrap();
        let out = convolve2d(&img, &k, BoundaryMode::Zero).unwrap();
        assert_eq!(out.data(), &[0.0, 1.0, 2.0]);
    }

    #[test]
    fn kernel_larger_than_image_errors() {
        let img = img_from(&[&[1.0, 2.0]]);
        let k = Kernel::from_vec(3, 3, vec![0.0; 9]).unwrap();
        assert!(convolve2d(&img, &k, BoundaryMode::Reflect).is_err());
    }

    #[test]
    fn separable_identity_and_delta() {
        let img = img_from(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], &[7.0, 8.0, 9.0]]);
        let out = separable_convolve(&img, &[1.0], &[1.0], BoundaryMode::Reflect).unwrap();
        assert_eq!(out, img);
        let out = separable_convolve(&img, &[0.0, 1.0, 0.0], &[0.0, 1.0, 0.0], BoundaryMode::Reflect).unwrap();
        for (a, b) in out.data().iter().zip(img.data()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn separable_rejects_even_length() {
        let img = img_from(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert!(separable_convolve(&img, &[0.5, 0.5], &[1.0], BoundaryMode::Reflect).is_err());
    }

    #[test]
    fn rescale_unit_handles_constant() {
        let img = Image::from_vec(2, 2, vec![3.0; 4]).unwrap();
        assert!(img.rescale_unit().data().iter().all(|&v| v == 0.5));
        let img = Image::from_vec(2, 2, vec![1.0, 2.0, 3.0, 5.0]).unwrap();
        let r = img.rescale_unit();
        assert_eq!(r.min_max(), (0.0, 1.0));
    }
}
