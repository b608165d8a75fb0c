//! Gaussian, Gabor, and difference-of-Gaussians kernels, the center-surround
//! "retinal" transform, and the k-means patch filter bank.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::{separable_convolve, BoundaryMode, Image, Kernel};

/// Normalized 1-D Gaussian weights over `[-radius, radius]`.
pub fn gaussian_weights(sigma: f64, radius: usize) -> Result<Vec<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::parameter(format!("sigma must be > 0, got {sigma}")));
    }
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut w: Vec<f64> = (-(radius as isize)..=radius as isize)
        .map(|i| (-(i * i) as f64 * inv).exp())
        .collect();
    let sum: f64 = w.iter().sum();
    for v in &mut w {
        *v /= sum;
    }
    Ok(w)
}

/// `(2r+1)^2` Gaussian kernel (2-D product form), normalized to sum 1.
pub fn gaussian_kernel(sigma: f64, radius: usize) -> Result<Kernel> {
    if !(sigma > 0.0) {
        return Err(Error::parameter(format!("sigma must be > 0, got {sigma}")));
    }
    let side = 2 * radius + 1;
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut weights = Vec::with_capacity(side * side);
    for j in -(radius as isize)..=radius as isize {
        for i in -(radius as isize)..=radius as isize {
            weights.push((-((i * i + j * j) as f64) * inv).exp());
        }
    }
    let sum: f64 = weights.iter().sum();
    for v in &mut weights {
        *v /= sum;
    }
    Kernel::from_vec(side, side, weights)
}

/// Parameters of the 2-D Gabor family.
///
/// `lambda` is the sinusoid wavelength in pixels, `theta` the orientation,
/// `psi` the phase offset, `sigma` the Gaussian envelope std, and `gamma`
/// the spatial aspect ratio of the envelope.
#[derive(Debug, Clone, Copy)]
pub struct GaborParams {
    pub lambda: f64,
    pub theta: f64,
    pub psi: f64,
    pub sigma: f64,
    pub gamma: f64,
}

impl GaborParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !(self.sigma > 0.0) || !(self.gamma > 0.0) {
            return Err(Error::parameter(
                "gabor lambda, sigma, and gamma must be > 0".to_string(),
            ));
        }
        if !self.theta.is_finite() || !self.psi.is_finite() {
            return Err(Error::parameter("gabor angles must be finite".to_string()));
        }
        Ok(())
    }
}

/// Quadrature Gabor pair: `even = envelope * cos(2*pi*x'/lambda + psi)`,
/// `odd = envelope * sin(...)`, with envelope
/// `exp(-(x'^2 + gamma^2 y'^2) / (2 sigma^2))` in rotated coordinates
/// `x' = x cos(theta) + y sin(theta)`, `y' = -x sin(theta) + y cos(theta)`.
///
/// The kernels are returned unnormalized (even center value is 1 at psi=0);
/// use [`Kernel::normalized_l2`] for unit-norm filters.
pub fn gabor_kernel(p: &GaborParams, radius: usize) -> Result<(Kernel, Kernel)> {
    p.validate()?;
    let side = 2 * radius + 1;
    let (sin_t, cos_t) = p.theta.sin_cos();
    let inv = 1.0 / (2.0 * p.sigma * p.sigma);
    let mut even = Vec::with_capacity(side * side);
    let mut odd = Vec::with_capacity(side * side);
    for j in -(radius as isize)..=radius as isize {
        for i in -(radius as isize)..=radius as isize {
            let (x, y) = (i as f64, j as f64);
            let xp = x * cos_t + y * sin_t;
            let yp = -x * sin_t + y * cos_t;
            let envelope = (-(xp * xp + p.gamma * p.gamma * yp * yp) * inv).exp();
            let phase = 2.0 * std::f64::consts::PI * xp / p.lambda + p.psi;
            even.push(envelope * phase.cos());
            odd.push(envelope * phase.sin());
        }
    }
    Ok((
        Kernel::from_vec(side, side, even)?,
        Kernel::from_vec(side, side, odd)?,
    ))
}

/// Scale-space difference parameters: base variance `t` and increment `dt`,
/// both in pixels squared.
#[derive(Debug, Clone, Copy)]
pub struct DoGParams {
    pub t: f64,
    pub dt: f64,
}

impl DoGParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0) || !(self.dt > 0.0) {
            return Err(Error::parameter("DoG scales t and dt must be > 0".to_string()));
        }
        Ok(())
    }
}

fn smooth(img: &Image, sigma: f64) -> Result<Image> {
    let radius = (3.0 * sigma).ceil() as usize;
    let g = gaussian_weights(sigma, radius)?;
    if g.len() <= img.width() && g.len() <= img.height() {
        separable_convolve(img, &g, &g, BoundaryMode::Reflect)
    } else {
        // Kernel wider than the image: apply the weights through the
        // boundary extension directly.
        let c = (g.len() / 2) as isize;
        let mut horiz = Image::new(img.width(), img.height())?;
        for y in 0..img.height() as isize {
            for x in 0..img.width() as isize {
                let mut acc = 0.0;
                for (i, &w) in g.iter().enumerate() {
                    acc += w * img.sample(x - (i as isize - c), y, BoundaryMode::Reflect);
                }
                horiz.set(x as usize, y as usize, acc);
            }
        }
        let mut out = Image::new(img.width(), img.height())?;
        for y in 0..img.height() as isize {
            for x in 0..img.width() as isize {
                let mut acc = 0.0;
                for (i, &w) in g.iter().enumerate() {
                    acc += w * horiz.sample(x, y - (i as isize - c), BoundaryMode::Reflect);
                }
                out.set(x as usize, y as usize, acc);
            }
        }
        Ok(out)
    }
}

/// Scale-normalized difference of Gaussians:
/// `(t/dt) * (L(sqrt(t+dt)) - L(sqrt(t)))`, approximating the
/// scale-normalized Laplacian `t * (L_xx + L_yy)`.
pub fn dog_response(img: &Image, p: &DoGParams) -> Result<Image> {
    p.validate()?;
    let wide = smooth(img, (p.t + p.dt).sqrt())?;
    let narrow = smooth(img, p.t.sqrt())?;
    let scale = p.t / p.dt;
    let data = wide
        .data()
        .iter()
        .zip(narrow.data())
        .map(|(a, b)| scale * (a - b))
        .collect();
    Image::from_vec(img.width(), img.height(), data)
}

/// Center-surround "retinal" rendering: the DoG response rescaled affinely
/// to `[0, 1]`. A constant response maps to all 0.5.
pub fn lgn_image(img: &Image, p: &DoGParams) -> Result<Image> {
    Ok(dog_response(img, p)?.rescale_unit())
}

/// Normalized image patches sampled on a stride grid, ready for clustering.
#[derive(Debug, Clone)]
pub struct PatchSet {
    side: usize,
    patches: Vec<Vec<f64>>,
}

impl PatchSet {
    /// Wrap externally produced patches; each must be a `side x side`
    /// row-major block.
    pub fn from_patches(side: usize, patches: Vec<Vec<f64>>) -> Result<Self> {
        if side % 2 == 0 || side == 0 {
            return Err(Error::contract(format!("patch side must be odd, got {side}")));
        }
        if patches.iter().any(|p| p.len() != side * side) {
            return Err(Error::dimension("patch length does not match side".to_string()));
        }
        Ok(PatchSet { side, patches })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    pub fn patches(&self) -> &[Vec<f64>] {
        &self.patches
    }
}

/// Extract all fully interior `patch x patch` windows on the stride grid,
/// each normalized to zero mean and unit l2 norm. Zero-variance windows are
/// dropped.
pub fn extract_patches(img: &Image, patch: usize, stride: usize) -> Result<PatchSet> {
    if patch % 2 == 0 || patch == 0 {
        return Err(Error::contract(format!("patch side must be odd, got {patch}")));
    }
    if patch > img.width() || patch > img.height() {
        return Err(Error::dimension(format!(
            "patch {patch} larger than image {}x{}",
            img.width(),
            img.height()
        )));
    }
    if stride == 0 {
        return Err(Error::parameter("stride must be >= 1".to_string()));
    }
    let mut patches = Vec::new();
    let mut y0 = 0;
    while y0 + patch <= img.height() {
        let mut x0 = 0;
        while x0 + patch <= img.width() {
            let mut v = Vec::with_capacity(patch * patch);
            for dy in 0..patch {
                for dx in 0..patch {
                    v.push(img.get(x0 + dx, y0 + dy));
                }
            }
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            for x in &mut v {
                *x -= mean;
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                let inv = 1.0 / norm;
                for x in &mut v {
                    *x *= inv;
                }
                patches.push(v);
            }
            x0 += stride;
        }
        y0 += stride;
    }
    Ok(PatchSet { side: patch, patches })
}

/// Learned bank of `k` zero-mean, unit-norm patch filters.
#[derive(Debug, Clone)]
pub struct FilterBank {
    patch: usize,
    centroids: Vec<Kernel>,
}

impl FilterBank {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn patch(&self) -> usize {
        self.patch
    }

    pub fn centroids(&self) -> &[Kernel] {
        &self.centroids
    }
}

/// Lloyd's algorithm with k-means++ seeding under the given seed.
///
/// Patches are sorted canonically before clustering, so the result depends
/// only on the patch multiset and the seed. Stops at `max_iter` or when the
/// assignment stabilizes; final centroids are re-normalized to zero mean and
/// unit norm (a cluster that loses every member becomes a zero "dead unit").
pub fn kmeans_filterbank(patches: &PatchSet, k: usize, seed: u64, max_iter: usize) -> Result<FilterBank> {
    kmeans_filterbank_traced(patches, k, seed, max_iter).map(|(bank, _)| bank)
}

/// As [`kmeans_filterbank`], also returning the within-cluster sum of
/// squares after each assignment step.
pub fn kmeans_filterbank_traced(
    patches: &PatchSet,
    k: usize,
    seed: u64,
    max_iter: usize,
) -> Result<(FilterBank, Vec<f64>)> {
    if patches.is_empty() {
        return Err(Error::contract("k-means requires a non-empty patch set".to_string()));
    }
    if k == 0 {
        return Err(Error::parameter("k must be >= 1".to_string()));
    }
    if k > patches.len() {
        return Err(Error::parameter(format!(
            "k = {k} exceeds the number of patches ({})",
            patches.len()
        )));
    }
    if max_iter == 0 {
        return Err(Error::parameter("max_iter must be >= 1".to_string()));
    }
    let dim = patches.side * patches.side;
    let mut data: Vec<Vec<f64>> = patches.patches.clone();
    data.sort_unstable_by(|a, b| {
        for (x, y) in a.iter().zip(b) {
            match x.total_cmp(y) {
                std::cmp::Ordering::Equal => continue,
                other => return other,
            }
        }
        std::cmp::Ordering::Equal
    });

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = kmeans_pp_init(&data, k, &mut rng);

    let mut assignment = vec![usize::MAX; data.len()];
    let mut wcss_trace = Vec::new();
    for _ in 0..max_iter {
        // Assignment step.
        let mut changed = false;
        let mut wcss = 0.0;
        for (i, p) in data.iter().enumerate() {
            let (best, d2) = nearest_center(p, &centers);
            wcss += d2;
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }
        wcss_trace.push(wcss);
        if !changed {
            break;
        }
        // Update step.
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in data.iter().zip(&assignment) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for (c, (sum, count)) in centers.iter_mut().zip(sums.iter().zip(&counts)) {
            if *count > 0 {
                let inv = 1.0 / *count as f64;
                for (cv, sv) in c.iter_mut().zip(sum) {
                    *cv = sv * inv;
                }
            } else {
                c.iter_mut().for_each(|v| *v = 0.0);
            }
        }
    }

    let centroids = centers
        .into_iter()
        .map(|mut c| {
            let mean = c.iter().sum::<f64>() / dim as f64;
            for v in &mut c {
                *v -= mean;
            }
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                let inv = 1.0 / norm;
                for v in &mut c {
                    *v *= inv;
                }
            } else {
                c.iter_mut().for_each(|v| *v = 0.0);
            }
            Kernel::from_vec(patches.side, patches.side, c)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((FilterBank { patch: patches.side, centroids }, wcss_trace))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest_center(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centers.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    (best, best_d)
}

fn kmeans_pp_init(data: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers = Vec::with_capacity(k);
    centers.push(data[rng.gen_range(0..data.len())].clone());
    let mut d2: Vec<f64> = data.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut r = rng.gen::<f64>() * total;
            let mut chosen = data.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                r -= d;
                if r <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // All remaining distances zero (duplicate patches): pick uniformly.
            rng.gen_range(0..data.len())
        };
        centers.push(data[idx].clone());
        for (d, p) in d2.iter_mut().zip(data) {
            let nd = sq_dist(p, centers.last().unwrap());
            if nd < *d {
                *d = nd;
            }
        }
    }
    centers
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_kernel_normalized_peaked() {
        let k = gaussian_kernel(1.0, 3).unwrap();
        assert!((k.sum() - 1.0).abs() < 1e-12);
        let center = k.get(3, 3);
        assert!(k.weights().iter().all(|&w| w <= center));
    }

    #[test]
    fn gaussian_rejects_bad_sigma() {
        assert!(gaussian_kernel(0.0, 3).is_err());
        assert!(gaussian_weights(-1.0, 3).is_err());
    }

    #[test]
    fn gabor_center_value_at_zero_phase() {
        let p = GaborParams { lambda: 4.0, theta: 0.3, psi: 0.0, sigma: 2.0, gamma: 0.5 };
        let (even, _) = gabor_kernel(&p, 5).unwrap();
        assert!((even.get(5, 5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gabor_long_wavelength_tends_to_envelope() {
        let p = GaborParams { lambda: 1e9, theta: 0.0, psi: 0.0, sigma: 1.5, gamma: 1.0 };
        let (even, odd) = gabor_kernel(&p, 4).unwrap();
        let g = gaussian_kernel(1.5, 4).unwrap();
        // Same shape up to the normalization of the Gaussian kernel.
        let scale = g.get(4, 4);
        for (e, gw) in even.weights().iter().zip(g.weights()) {
            assert!((e - gw / scale).abs() < 1e-6);
        }
        assert!(odd.weights().iter().all(|&v| v.abs() < 1e-6));
    }

    #[test]
    fn l2_normalization_of_quadrature_kernels() {
        // The discrete cos/sin kernels are scaled to unit l2 norm.
        let p = GaborParams { lambda: 5.0, theta: 0.4, psi: 0.0, sigma: 2.0, gamma: 0.8 };
        let (even, odd) = gabor_kernel(&p, 6).unwrap();
        for k in [even.normalized_l2(), odd.normalized_l2()] {
            let norm: f64 = k.weights().iter().map(|w| w * w).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn quadrature_pair_shares_envelope() {
        let p = GaborParams { lambda: 3.0, theta: 1.1, psi: 0.0, sigma: 2.0, gamma: 0.7 };
        let (even, odd) = gabor_kernel(&p, 6).unwrap();
        let inv = 1.0 / (2.0 * p.sigma * p.sigma);
        let (sin_t, cos_t) = p.theta.sin_cos();
        for j in -6i64..=6 {
            for i in -6i64..=6 {
                let (x, y) = (i as f64, j as f64);
                let xp = x * cos_t + y * sin_t;
                let yp = -x * sin_t + y * cos_t;
                let env = (-(xp * xp + p.gamma * p.gamma * yp * yp) * inv).exp();
                let e = even.get((i + 6) as usize, (j + 6) as usize);
                let o = odd.get((i + 6) as usize, (j + 6) as usize);
                assert!((e * e + o * o - env * env).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dog_annihilates_constants_and_ramps() {
        let p = DoGParams { t: 1.0, dt: 1.0 };
        let flat = Image::from_vec(16, 16, vec![0.42; 256]).unwrap();
        let r = dog_response(&flat, &p).unwrap();
        assert!(r.data().iter().all(|&v| v.abs() < 1e-12));

        let ramp = Image::from_fn(24, 24, |x, y| 0.01 * x as f64 + 0.02 * y as f64).unwrap();
        let r = dog_response(&ramp, &p).unwrap();
        // Interior only: reflection bends the ramp at the borders.
        for y in 8..16 {
            for x in 8..16 {
                assert!(r.get(x, y).abs() < 1e-9, "r={}", r.get(x, y));
            }
        }
    }

    #[test]
    fn lgn_rescale_contract() {
        let p = DoGParams { t: 1.0, dt: 1.0 };
        let flat = Image::from_vec(8, 8, vec![0.9; 64]).unwrap();
        let out = lgn_image(&flat, &p).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.5));

        let blob = Image::from_fn(17, 17, |x, y| {
            let dx = x as f64 - 8.0;
            let dy = y as f64 - 8.0;
            (-(dx * dx + dy * dy) / 8.0).exp()
        })
        .unwrap();
        let out = lgn_image(&blob, &p).unwrap();
        let (lo, hi) = out.min_max();
        assert_eq!((lo, hi), (0.0, 1.0));
    }

    #[test]
    fn patch_grid_count_and_normalization() {
        let img = Image::from_fn(8, 8, |x, y| ((x * 13 + y * 7) % 5) as f64).unwrap();
        let set = extract_patches(&img, 3, 1).unwrap();
        assert_eq!(set.len(), 36);
        for p in set.patches() {
            let mean = p.iter().sum::<f64>() / p.len() as f64;
            let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(mean.abs() < 1e-12);
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_image_yields_no_patches() {
        let img = Image::from_vec(8, 8, vec![0.5; 64]).unwrap();
        let set = extract_patches(&img, 3, 1).unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn patch_too_large_is_rejected() {
        let img = Image::new(4, 4).unwrap();
        assert!(extract_patches(&img, 5, 1).is_err());
        assert!(extract_patches(&img, 2, 1).is_err());
    }

    #[test]
    fn kmeans_single_cluster_is_mean_direction() {
        let img = Image::from_fn(6, 6, |x, y| ((x * 3 + y * 11) % 7) as f64).unwrap();
        let set = extract_patches(&img, 3, 1).unwrap();
        let bank = kmeans_filterbank(&set, 1, 9, 50).unwrap();
        let dim = 9;
        let mut mean = vec![0.0; dim];
        for p in set.patches() {
            for (m, v) in mean.iter_mut().zip(p) {
                *m += v;
            }
        }
        let norm = mean.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (c, m) in bank.centroids()[0].weights().iter().zip(&mean) {
            assert!((c - m / norm).abs() < 1e-9);
        }
    }

    #[test]
    fn kmeans_is_deterministic_for_fixed_seed() {
        let img = Image::from_fn(10, 10, |x, y| ((x * 29 + y * 17) % 13) as f64).unwrap();
        let set = extract_patches(&img, 3, 1).unwrap();
        let a = kmeans_filterbank(&set, 4, 123, 50).unwrap();
        let b = kmeans_filterbank(&set, 4, 123, 50).unwrap();
        for (ka, kb) in a.centroids().iter().zip(b.centroids()) {
            for (x, y) in ka.weights().iter().zip(kb.weights()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn kmeans_parameter_errors() {
        let img = Image::from_fn(4, 4, |x, y| (x + y) as f64).unwrap();
        let set = extract_patches(&img, 3, 1).unwrap();
        assert!(kmeans_filterbank(&set, 0, 1, 10).is_err());
        assert!(kmeans_filterbank(&set, set.len() + 1, 1, 10).is_err());
        let empty = PatchSet { side: 3, patches: vec![] };
        assert!(kmeans_filterbank(&empty, 1, 1, 10).is_err());
    }

    #[test]
    fn bank_invariants_hold() {
        let img = Image::from_fn(12, 12, |x, y| ((x * 5 + y * 19) % 23) as f64 / 23.0).unwrap();
        let set = extract_patches(&img, 3, 1).unwrap();
        let bank = kmeans_filterbank(&set, 5, 7, 100).unwrap();
        for c in bank.centroids() {
            let mean = c.weights().iter().sum::<f64>() / 9.0;
            let norm = c.weights().iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(mean.abs() < 1e-9);
            assert!(norm == 0.0 || (norm - 1.0).abs() < 1e-9);
        }
    }
}
