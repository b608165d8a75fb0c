//! Small numeric helpers shared across modules.

use crate::error::{Error, Result};
use crate::image::Image;

/// Sum after sorting by total order. Fixes the accumulation order by value,
/// so sums over the same multiset are bitwise identical regardless of the
/// scan direction that produced the terms.
pub(crate) fn stable_sum(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(|a, b| a.total_cmp(b));
    values.iter().sum()
}

/// Mean squared error between two same-sized images.
pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    if !a.same_dims(b) {
        return Err(Error::dimension("mse requires equal dimensions".to_string()));
    }
    let n = a.data().len() as f64;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / n)
}

/// Peak signal-to-noise ratio in dB, with peak intensity 1.0.
/// Identical images give +infinity.
pub fn psnr(reference: &Image, test: &Image) -> Result<f64> {
    let e = mse(reference, test)?;
    if e == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-10.0 * e.log10())
}

/// Quantile of `values` by sorting with midpoint interpolation: at an exact
/// order-statistic boundary the two adjacent values are averaged.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::contract("quantile of empty sample".to_string()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::parameter(format!("quantile {q} outside [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    let pos = q * n as f64;
    let idx = pos.floor() as usize;
    if pos == idx as f64 && idx >= 1 && idx < n {
        Ok(0.5 * (sorted[idx - 1] + sorted[idx]))
    } else {
        Ok(sorted[idx.min(n - 1)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_midpoint_interpolation() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5).unwrap(), 2.5);
        assert_eq!(quantile(&v, 0.25).unwrap(), 1.5);
        assert_eq!(quantile(&v, 0.1).unwrap(), 1.0);
        assert_eq!(quantile(&v, 0.9).unwrap(), 4.0);
        assert_eq!(quantile(&v, 0.0).unwrap(), 1.0);
        assert_eq!(quantile(&v, 1.0).unwrap(), 4.0);
    }

    #[test]
    fn psnr_of_identical_images() {
        let a = Image::from_vec(2, 2, vec![0.25; 4]).unwrap();
        assert!(psnr(&a, &a).unwrap().is_infinite());
    }

    #[test]
    fn stable_sum_is_order_independent() {
        let mut a = vec![1e-16, 1.0, -1.0, 3e-16, 1e-17];
        let mut b = vec![1.0, 3e-16, 1e-17, -1.0, 1e-16];
        assert_eq!(stable_sum(&mut a).to_bits(), stable_sum(&mut b).to_bits());
    }
}
