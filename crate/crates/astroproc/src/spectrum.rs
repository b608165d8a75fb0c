//! 2-D power spectrum and azimuthally averaged 1-D radial profile.

use crate::error::{Error, Result};
use crate::fft::dft2;
use crate::image::Image;

/// Power spectrum plus its radial profile.
///
/// `radial_freq[b]` is the bin-center radius in cycles/image, `radial_power`
/// the mean power per annulus, `counts` the annulus populations. The bins
/// partition the plane: radii at or beyond the last bin are clamped into it.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub power2d: Image,
    pub radial_freq: Vec<f64>,
    pub radial_power: Vec<f64>,
    pub counts: Vec<usize>,
}

/// `|DFT|^2` with the zero-frequency bin shifted to the center
/// `(floor(W/2), floor(H/2))`. Output dimensions equal the input's.
pub fn power_spectrum_2d(img: &Image) -> Image {
    let f = dft2(img);
    let power = f.power();
    let (w, h) = (power.width(), power.height());
    let (cx, cy) = (w / 2, h / 2);
    let mut out = Image::new(w, h).expect("valid dims");
    for y in 0..h {
        for x in 0..w {
            // Bin (0,0) lands on (cx, cy).
            let sx = (x + w - cx) % w;
            let sy = (y + h - cy) % h;
            out.set(x, y, power.get(sx, sy));
        }
    }
    out
}

/// Azimuthal average of a DC-centered power image.
///
/// Each pixel joins the bin of its integer-rounded (half-up) Euclidean
/// radius from the center, clamped to `nbins - 1`; empty bins carry zero
/// power and zero count.
pub fn radial_average(power2d: &Image, nbins: usize) -> Result<Spectrum> {
    if nbins == 0 {
        return Err(Error::parameter("nbins must be >= 1".to_string()));
    }
    let (w, h) = (power2d.width(), power2d.height());
    let (cx, cy) = ((w / 2) as f64, (h / 2) as f64);
    let mut sums = vec![0.0f64; nbins];
    let mut counts = vec![0usize; nbins];
    for y in 0..h {
        for x in 0..w {
            let r = (x as f64 - cx).hypot(y as f64 - cy);
            let bin = ((r + 0.5).floor() as usize).min(nbins - 1);
            sums[bin] += power2d.get(x, y);
            counts[bin] += 1;
        }
    }
    let radial_power = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let radial_freq = (0..nbins).map(|b| b as f64).collect();
    Ok(Spectrum { power2d: power2d.clone(), radial_freq, radial_power, counts })
}

/// Default radial bin count: `floor(min(W, H) / 2)`, at least 1.
pub fn default_nbins(width: usize, height: usize) -> usize {
    (width.min(height) / 2).max(1)
}
