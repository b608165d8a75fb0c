//! Image gradients, Hessian fields, and the shape-index profile.
//!
//! The shape index collapses the two Hessian eigenvalues into a single
//! curvature class in `[-1, +1]`: with eigenvalues ordered `l1 >= l2`,
//! `S = (2/pi) * atan((l2 + l1) / (l2 - l1))`, so bright isotropic caps map
//! to +1 and dark cups to -1. Flat patches are undefined and carry the
//! quiet sentinel [`SHAPE_INDEX_UNDEFINED`] instead of NaN.

use crate::error::{Error, Result};
use crate::filterbank::gaussian_weights;
use crate::image::{separable_convolve, BoundaryMode, Image};
use crate::morphology::ExtremaMask;

/// Sentinel stored where the shape index is undefined (zero Hessian).
/// Deliberately outside `[-1, 1]` and finite.
pub const SHAPE_INDEX_UNDEFINED: f64 = 2.0;

/// First partial derivatives of an image, intensity per pixel.
#[derive(Debug, Clone)]
pub struct GradientField {
    pub gx: Image,
    pub gy: Image,
}

/// Second partials at smoothing scale sigma. `ixy` is symmetric by
/// construction, so a single plane is stored.
#[derive(Debug, Clone)]
pub struct HessianField {
    pub ixx: Image,
    pub ixy: Image,
    pub iyy: Image,
}

/// Per-pixel shape index in `[-1, 1]`, or [`SHAPE_INDEX_UNDEFINED`].
#[derive(Debug, Clone)]
pub struct ShapeIndexMap {
    values: Image,
}

impl ShapeIndexMap {
    pub fn values(&self) -> &Image {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values.get(x, y)
    }

    /// Whether the shape index is defined at this pixel.
    #[inline]
    pub fn is_defined(&self, x: usize, y: usize) -> bool {
        self.values.get(x, y) != SHAPE_INDEX_UNDEFINED
    }
}

/// Central differences in the interior, one-sided at the borders.
pub fn gradient(img: &Image) -> Result<GradientField> {
    let (w, h) = (img.width(), img.height());
    if w < 2 || h < 2 {
        return Err(Error::dimension(format!(
            "gradient requires at least 2x2, got {w}x{h}"
        )));
    }
    let mut gx = Image::new(w, h)?;
    let mut gy = Image::new(w, h)?;
    for y in 0..h {
        for x in 0..w {
            let dx = if x == 0 {
                img.get(1, y) - img.get(0, y)
            } else if x == w - 1 {
                img.get(w - 1, y) - img.get(w - 2, y)
            } else {
                (img.get(x + 1, y) - img.get(x - 1, y)) / 2.0
            };
            let dy = if y == 0 {
                img.get(x, 1) - img.get(x, 0)
            } else if y == h - 1 {
                img.get(x, h - 1) - img.get(x, h - 2)
            } else {
                (img.get(x, y + 1) - img.get(x, y - 1)) / 2.0
            };
            gx.set(x, y, dx);
            gy.set(x, y, dy);
        }
    }
    Ok(GradientField { gx, gy })
}

/// Per-pixel `sqrt(gx^2 + gy^2)`.
pub fn gradient_magnitude(gf: &GradientField) -> Image {
    let data = gf
        .gx
        .data()
        .iter()
        .zip(gf.gy.data())
        .map(|(x, y)| (x * x + y * y).sqrt())
        .collect();
    Image::from_vec(gf.gx.width(), gf.gx.height(), data).expect("dimensions preserved")
}

/// Full-quadrant gradient angle in `(-pi, pi]`; the zero vector maps to 0.
pub fn gradient_orientation(gf: &GradientField) -> Image {
    let data = gf
        .gx
        .data()
        .iter()
        .zip(gf.gy.data())
        .map(|(&x, &y)| {
            let a = y.atan2(x);
            if a == -std::f64::consts::PI {
                std::f64::consts::PI
            } else {
                a
            }
        })
        .collect();
    Image::from_vec(gf.gx.width(), gf.gx.height(), data).expect("dimensions preserved")
}

/// Gaussian-smooth at scale `sigma`, then second central differences
/// (Reflect boundary).
pub fn hessian(img: &Image, sigma: f64) -> Result<HessianField> {
    if !(sigma >= 0.5) {
        return Err(Error::parameter(format!(
            "hessian smoothing scale must be >= 0.5 px, got {sigma}"
        )));
    }
    let radius = (3.0 * sigma).ceil() as usize;
    let g = gaussian_weights(sigma, radius)?;
    let smooth = if g.len() <= img.width() && g.len() <= img.height() {
        separable_convolve(img, &g, &g, BoundaryMode::Reflect)?
    } else {
        // Tiny images: fall back to sampling the kernel through the
        // boundary extension directly.
        smooth_small(img, &g)
    };
    let (w, h) = (img.width(), img.height());
    let m = BoundaryMode::Reflect;
    let mut ixx = Image::new(w, h)?;
    let mut ixy = Image::new(w, h)?;
    let mut iyy = Image::new(w, h)?;
    for y in 0..h as isize {
        for x in 0..w as isize {
            let c = smooth.sample(x, y, m);
            let xx = smooth.sample(x + 1, y, m) - 2.0 * c + smooth.sample(x - 1, y, m);
            let yy = smooth.sample(x, y + 1, m) - 2.0 * c + smooth.sample(x, y - 1, m);
            let xy = (smooth.sample(x + 1, y + 1, m) - smooth.sample(x + 1, y - 1, m)
                - smooth.sample(x - 1, y + 1, m)
                + smooth.sample(x - 1, y - 1, m))
                / 4.0;
            ixx.set(x as usize, y as usize, xx);
            iyy.set(x as usize, y as usize, yy);
            ixy.set(x as usize, y as usize, xy);
        }
    }
    Ok(HessianField { ixx, ixy, iyy })
}

fn smooth_small(img: &Image, g: &[f64]) -> Image {
    let c = (g.len() / 2) as isize;
    let mut horiz = Image::new(img.width(), img.height()).expect("valid dims");
    for y in 0..img.height() as isize {
        for x in 0..img.width() as isize {
            let mut acc = 0.0;
            for (i, &w) in g.iter().enumerate() {
                acc += w * img.sample(x - (i as isize - c), y, BoundaryMode::Reflect);
            }
            horiz.set(x as usize, y as usize, acc);
        }
    }
    let mut out = Image::new(img.width(), img.height()).expect("valid dims");
    for y in 0..img.height() as isize {
        for x in 0..img.width() as isize {
            let mut acc = 0.0;
            for (i, &w) in g.iter().enumerate() {
                acc += w * horiz.sample(x, y - (i as isize - c), BoundaryMode::Reflect);
            }
            out.set(x as usize, y as usize, acc);
        }
    }
    out
}

/// Shape-index map at smoothing scale `sigma`.
pub fn shape_index(img: &Image, sigma: f64) -> Result<ShapeIndexMap> {
    let hess = hessian(img, sigma)?;
    let (w, h) = (img.width(), img.height());
    let mut values = Image::new(w, h)?;
    for y in 0..h {
        for x in 0..w {
            let xx = hess.ixx.get(x, y);
            let xy = hess.ixy.get(x, y);
            let yy = hess.iyy.get(x, y);
            let mean = 0.5 * (xx + yy);
            let disc = (0.5 * (xx - yy)).hypot(xy);
            let s = if disc == 0.0 {
                if mean < 0.0 {
                    1.0
                } else if mean > 0.0 {
                    -1.0
                } else {
                    SHAPE_INDEX_UNDEFINED
                }
            } else {
                // (l2 + l1)/(l2 - l1) with l1 = mean + disc, l2 = mean - disc.
                (2.0 / std::f64::consts::PI) * (-mean / disc).atan()
            };
            values.set(x, y, s);
        }
    }
    Ok(ShapeIndexMap { values })
}

/// Mark pixels whose defined shape index lies within `tol` of `target`.
pub fn cap_mask(si: &ShapeIndexMap, target: f64, tol: f64) -> Result<ExtremaMask> {
    if !(tol > 0.0) {
        return Err(Error::parameter(format!("tolerance must be > 0, got {tol}")));
    }
    let (w, h) = (si.values.width(), si.values.height());
    let mut mask = ExtremaMask::new(w, h)?;
    for y in 0..h {
        for x in 0..w {
            if si.is_defined(x, y) && (si.get(x, y) - target).abs() <= tol {
                mask.set(x, y, true);
            }
        }
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_ramp_gradient() {
        let img = Image::from_fn(8, 8, |x, _| 0.1 * x as f64).unwrap();
        let gf = gradient(&img).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                assert!((gf.gx.get(x, y) - 0.1).abs() < 1e-12);
                assert!(gf.gy.get(x, y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn one_pixel_wide_is_rejected() {
        let img = Image::new(1, 8).unwrap();
        assert!(gradient(&img).is_err());
    }

    #[test]
    fn magnitude_345() {
        let gx = Image::from_vec(1, 1, vec![3.0]).unwrap();
        let gy = Image::from_vec(1, 1, vec![4.0]).unwrap();
        let m = gradient_magnitude(&GradientField { gx, gy });
        assert!((m.get(0, 0) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn orientation_quadrants() {
        let gx = Image::from_vec(3, 1, vec![1.0, 0.0, 0.0]).unwrap();
        let gy = Image::from_vec(3, 1, vec![0.0, 1.0, 0.0]).unwrap();
        let o = gradient_orientation(&GradientField { gx, gy });
        assert_eq!(o.get(0, 0), 0.0);
        assert!((o.get(1, 0) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(o.get(2, 0), 0.0);
    }

    #[test]
    fn hessian_of_constant_is_zero() {
        let img = Image::from_vec(9, 9, vec![0.3; 81]).unwrap();
        let hess = hessian(&img, 1.0).unwrap();
        assert!(hess.ixx.data().iter().all(|&v| v == 0.0));
        assert!(hess.ixy.data().iter().all(|&v| v == 0.0));
        assert!(hess.iyy.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hessian_of_quadratic() {
        // Second differences annihilate the smoothing offset, so ixx of x^2
        // is exactly 2 away from the reflected borders.
        let img = Image::from_fn(16, 16, |x, _| (x as f64) * (x as f64)).unwrap();
        let hess = hessian(&img, 0.5).unwrap();
        let r = 3; // kernel radius at sigma 0.5 is ceil(1.5) = 2, plus stencil
        for y in r..16 - r {
            for x in r..16 - r {
                assert!((hess.ixx.get(x, y) - 2.0).abs() < 1e-9, "ixx={}", hess.ixx.get(x, y));
                assert!(hess.ixy.get(x, y).abs() < 1e-9);
                assert!(hess.iyy.get(x, y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn hessian_rejects_small_sigma() {
        let img = Image::new(8, 8).unwrap();
        assert!(hessian(&img, 0.4).is_err());
    }

    #[test]
    fn blob_center_is_spherical_cap() {
        let img = Image::from_fn(21, 21, |x, y| {
            let dx = x as f64 - 10.0;
            let dy = y as f64 - 10.0;
            (-(dx * dx + dy * dy) / 18.0).exp()
        })
        .unwrap();
        let si = shape_index(&img, 1.0).unwrap();
        assert!((si.get(10, 10) - 1.0).abs() < 1e-6, "S={}", si.get(10, 10));
        // Dark blob flips the sign.
        let neg = img.map(|v| -v);
        let si_neg = shape_index(&neg, 1.0).unwrap();
        assert!((si_neg.get(10, 10) + 1.0).abs() < 1e-6);
    }

    #[test]
    fn flat_region_is_undefined() {
        let img = Image::from_vec(9, 9, vec![0.7; 81]).unwrap();
        let si = shape_index(&img, 1.0).unwrap();
        assert!(!si.is_defined(4, 4));
        assert_eq!(si.get(4, 4), SHAPE_INDEX_UNDEFINED);
        let m = cap_mask(&si, 1.0, 2.0).unwrap();
        assert_eq!(m.count(), 0);
    }

    #[test]
    fn cap_mask_full_tolerance_marks_all_defined() {
        let img = Image::from_fn(9, 9, |x, y| ((x * x + 2 * y) % 7) as f64 / 7.0).unwrap();
        let si = shape_index(&img, 1.0).unwrap();
        let m = cap_mask(&si, 0.0, 1.0).unwrap();
        let defined = (0..9)
            .flat_map(|y| (0..9).map(move |x| (x, y)))
            .filter(|&(x, y)| si.is_defined(x, y))
            .count();
        assert_eq!(m.count(), defined);
    }
}
