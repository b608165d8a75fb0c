//! Noise-level estimation and non-local means denoising.
//!
//! Each output pixel is a patch-similarity-weighted average over a search
//! window. Every sum here (patch distances, the weighted average, the noise
//! estimator's mean) is accumulated in value-sorted order, so the output is
//! bitwise equivariant under 90-degree rotation and independent of thread
//! count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{BoundaryMode, Image};
use crate::stats::stable_sum;

/// Patch comparison weighting: uniform (the fast variant) or spatially
/// Gaussian (the slow variant).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PatchWeighting {
    Uniform,
    GaussianSpatial { sigma_patch: f64 },
}

/// Non-local means parameters.
#[derive(Debug, Clone, Copy)]
pub struct NlmParams {
    /// Patch half-width; patches are `(2r+1)^2`. Zero compares bare pixels.
    pub patch_radius: usize,
    /// Search window half-width, >= `patch_radius`.
    pub search_radius: usize,
    /// Filtering strength in intensity units.
    pub h: f64,
    pub weighting: PatchWeighting,
}

impl NlmParams {
    pub fn validate(&self) -> Result<()> {
        if self.search_radius < self.patch_radius || self.search_radius == 0 {
            return Err(Error::parameter(format!(
                "search_radius {} must be >= max(patch_radius {}, 1)",
                self.search_radius, self.patch_radius
            )));
        }
        if !(self.h > 0.0) {
            return Err(Error::parameter(format!("h must be > 0, got {}", self.h)));
        }
        if let PatchWeighting::GaussianSpatial { sigma_patch } = self.weighting {
            if !(sigma_patch > 0.0) {
                return Err(Error::parameter(format!(
                    "sigma_patch must be > 0, got {sigma_patch}"
                )));
            }
        }
        Ok(())
    }
}

/// Default parameters for the fast (uniform-weighting) variant:
/// 7x7 patches in a 21x21 window.
pub fn default_params_fast(h: f64) -> NlmParams {
    NlmParams { patch_radius: 3, search_radius: 10, h, weighting: PatchWeighting::Uniform }
}

/// Default parameters for the slow (Gaussian-weighting) variant.
pub fn default_params_slow(h: f64) -> NlmParams {
    NlmParams {
        patch_radius: 3,
        search_radius: 10,
        h,
        weighting: PatchWeighting::GaussianSpatial { sigma_patch: 1.5 },
    }
}

const LAPLACIAN_DIFF: [(isize, isize, f64); 9] = [
    (-1, -1, 1.0),
    (0, -1, -2.0),
    (1, -1, 1.0),
    (-1, 0, -2.0),
    (0, 0, 4.0),
    (1, 0, -2.0),
    (-1, 1, 1.0),
    (0, 1, -2.0),
    (1, 1, 1.0),
];

/// Estimate the standard deviation of additive Gaussian noise with the 3x3
/// Laplacian pseudo-residual method:
/// `sigma = sqrt(pi/2) * mean(|L * I|) / 6` over interior pixels.
pub fn estimate_noise_sigma(img: &Image) -> Result<f64> {
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(Error::dimension(format!(
            "noise estimation requires at least 3x3, got {w}x{h}"
        )));
    }
    let mut residuals = Vec::with_capacity((w - 2) * (h - 2));
    let mut terms = [0.0; 9];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            for (t, &(dx, dy, wgt)) in terms.iter_mut().zip(&LAPLACIAN_DIFF) {
                *t = wgt * img.get((x as isize + dx) as usize, (y as isize + dy) as usize);
            }
            residuals.push(stable_sum(&mut terms).abs());
        }
    }
    let n = residuals.len() as f64;
    let mean = stable_sum(&mut residuals) / n;
    Ok((std::f64::consts::PI / 2.0).sqrt() * mean / 6.0)
}

/// Non-local means denoising.
///
/// Per pixel `i`, averages the pixels `j` of the (image-clipped) search
/// window with weights `exp(-max(d2(i,j) - 2*sigma_est^2, 0) / h^2)`, where
/// `d2` is the mean squared patch difference under the selected weighting
/// and `sigma_est` comes from [`estimate_noise_sigma`]. Patches are read
/// through Reflect padding. The output is a convex combination of input
/// pixels, so it stays within `[min(img), max(img)]`.
pub fn nlm_denoise(img: &Image, p: &NlmParams) -> Result<Image> {
    p.validate()?;
    if !img.is_finite() {
        return Err(Error::contract("nlm_denoise requires finite pixels".to_string()));
    }
    let sigma = estimate_noise_sigma(img)?;
    nlm_denoise_with_sigma(img, p, sigma)
}

/// [`nlm_denoise`] with the noise level supplied by the caller.
pub fn nlm_denoise_with_sigma(img: &Image, p: &NlmParams, sigma_est: f64) -> Result<Image> {
    p.validate()?;
    let (w, h) = (img.width(), img.height());
    let pr = p.patch_radius as isize;
    let sr = p.search_radius as isize;
    let patch_len = ((2 * pr + 1) * (2 * pr + 1)) as usize;

    // Spatial weights over patch offsets, normalized to sum 1.
    let patch_weights: Vec<f64> = match p.weighting {
        PatchWeighting::Uniform => vec![1.0 / patch_len as f64; patch_len],
        PatchWeighting::GaussianSpatial { sigma_patch } => {
            let mut ws = Vec::with_capacity(patch_len);
            for dy in -pr..=pr {
                for dx in -pr..=pr {
                    ws.push((-((dx * dx + dy * dy) as f64) / (2.0 * sigma_patch * sigma_patch)).exp());
                }
            }
            let mut sorted = ws.clone();
            let total = stable_sum(&mut sorted);
            ws.iter().map(|v| v / total).collect()
        }
    };

    let offsets: Vec<(isize, isize)> = (-pr..=pr)
        .flat_map(|dy| (-pr..=pr).map(move |dx| (dx, dy)))
        .collect();
    let var_term = 2.0 * sigma_est * sigma_est;
    let inv_h2 = 1.0 / (p.h * p.h);

    let rows: Vec<Vec<f64>> = (0..h as isize)
        .into_par_iter()
        .map(|y| {
            let mut row = Vec::with_capacity(w);
            let mut diff_terms = vec![0.0; patch_len];
            let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(((2 * sr + 1) * (2 * sr + 1)) as usize);
            for x in 0..w as isize {
                pairs.clear();
                let y_lo = (y - sr).max(0);
                let y_hi = (y + sr).min(h as isize - 1);
                let x_lo = (x - sr).max(0);
                let x_hi = (x + sr).min(w as isize - 1);
                for sy in y_lo..=y_hi {
                    for sx in x_lo..=x_hi {
                        for (t, (&(dx, dy), &pw)) in diff_terms
                            .iter_mut()
                            .zip(offsets.iter().zip(&patch_weights))
                        {
                            let a = img.sample(x + dx, y + dy, BoundaryMode::Reflect);
                            let b = img.sample(sx + dx, sy + dy, BoundaryMode::Reflect);
                            let d = a - b;
                            *t = pw * d * d;
                        }
                        let d2 = stable_sum(&mut diff_terms);
                        let weight = (-((d2 - var_term).max(0.0)) * inv_h2).exp();
                        pairs.push((weight, img.get(sx as usize, sy as usize)));
                    }
                }
                pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
                let mut num = 0.0;
                let mut den = 0.0;
                for &(wgt, v) in &pairs {
                    num += wgt * v;
                    den += wgt;
                }
                row.push(num / den);
            }
            row
        })
        .collect();

    let mut data = Vec::with_capacity(w * h);
    for row in rows {
        data.extend(row);
    }
    Image::from_vec(w, h, data)
}
