//! Formula oracles and clustering invariants for the filter-bank module.

use astroproc::filterbank::{
    dog_response, extract_patches, gabor_kernel, gaussian_kernel, kmeans_filterbank,
    kmeans_filterbank_traced, DoGParams, GaborParams, PatchSet,
};
use astroproc::image::Image;
use astroproc_testkit as kit;

#[test]
fn gaussian_kernel_matches_direct_formula() {
    let k = gaussian_kernel(1.0, 3).unwrap();
    let mut expected = Vec::new();
    for j in -3i64..=3 {
        for i in -3i64..=3 {
            expected.push((-((i * i + j * j) as f64) / 2.0).exp());
        }
    }
    let total: f64 = expected.iter().sum();
    for (got, want) in k.weights().iter().zip(&expected) {
        assert!((got - want / total).abs() < 1e-15);
    }
}

#[test]
fn gabor_quarter_turn_is_coordinate_substitution() {
    // theta = pi/2 sends x' -> y, y' -> -x, so the rotated kernel sampled at
    // (x, y) equals the theta = 0 kernel sampled at (y, -x).
    let r = 5usize;
    let base = GaborParams { lambda: 4.0, theta: 0.0, psi: 0.7, sigma: 2.0, gamma: 0.6 };
    let quarter = GaborParams { theta: std::f64::consts::FRAC_PI_2, ..base };
    let (e0, o0) = gabor_kernel(&base, r).unwrap();
    let (e9, o9) = gabor_kernel(&quarter, r).unwrap();
    let ri = r as isize;
    for j in -ri..=ri {
        for i in -ri..=ri {
            let at = |k: &astroproc::image::Kernel, x: isize, y: isize| {
                k.get((x + ri) as usize, (y + ri) as usize)
            };
            assert!((at(&e9, i, j) - at(&e0, j, -i)).abs() < 1e-12);
            assert!((at(&o9, i, j) - at(&o0, j, -i)).abs() < 1e-12);
        }
    }
}

#[test]
fn dog_center_approaches_scale_derivative_limit() {
    // Blob exp(-r^2/(2 sb^2)): as dt -> 0 the response tends to
    // t * dL/dt = (t/2) * laplacian(L), which at the blob center is
    // -t sb^2 / (sb^2 + t)^2; dt = t/10 stays within 5% of the limit.
    let sb = 4.0f64;
    let t = 4.0f64;
    let n = 49;
    let c = 24.0;
    let img = Image::from_fn(n, n, |x, y| {
        let (dx, dy) = (x as f64 - c, y as f64 - c);
        (-(dx * dx + dy * dy) / (2.0 * sb * sb)).exp()
    })
    .unwrap();
    let response = dog_response(&img, &DoGParams { t, dt: t / 10.0 }).unwrap();
    let analytic = -t * sb * sb / ((sb * sb + t) * (sb * sb + t));
    let got = response.get(24, 24);
    assert!(
        (got - analytic).abs() < 0.05 * analytic.abs(),
        "dog center {got} vs analytic {analytic}"
    );
}

#[test]
fn dog_is_linear_in_the_image() {
    let p = DoGParams { t: 1.5, dt: 0.5 };
    let a = kit::random_image(20, 20, 41);
    let b = kit::random_image(20, 20, 42);
    let mixed = Image::from_fn(20, 20, |x, y| 0.3 * a.get(x, y) - 1.1 * b.get(x, y)).unwrap();
    let ra = dog_response(&a, &p).unwrap();
    let rb = dog_response(&b, &p).unwrap();
    let rm = dog_response(&mixed, &p).unwrap();
    for i in 0..400 {
        let want = 0.3 * ra.data()[i] - 1.1 * rb.data()[i];
        assert!((rm.data()[i] - want).abs() < 1e-12);
    }
}

/// Normalized, zero-mean versions of `k` distinct base patterns.
fn distinct_patch_vectors() -> Vec<Vec<f64>> {
    let raw: [[f64; 9]; 3] = [
        [1.0, 0.0, -1.0, 1.0, 0.0, -1.0, 1.0, 0.0, -1.0],
        [1.0, 1.0, 1.0, 0.0, 0.0, 0.0, -1.0, -1.0, -1.0],
        [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -2.0],
    ];
    raw.iter()
        .map(|p| {
            let mean: f64 = p.iter().sum::<f64>() / 9.0;
            let mut v: Vec<f64> = p.iter().map(|x| x - mean).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            v
        })
        .collect()
}

fn wcss_of(assignments: &[usize], patches: &[Vec<f64>], k: usize) -> f64 {
    let dim = patches[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in patches.iter().zip(assignments) {
        counts[a] += 1;
        for (s, v) in sums[a].iter_mut().zip(p) {
            *s += v;
        }
    }
    let mut total = 0.0;
    for (p, &a) in patches.iter().zip(assignments) {
        if counts[a] == 0 {
            continue;
        }
        for (s, v) in sums[a].iter().zip(p) {
            let c = s / counts[a] as f64;
            total += (v - c) * (v - c);
        }
    }
    total
}

#[test]
fn kmeans_recovers_distinct_vectors_and_global_optimum() {
    // 8 patches drawn from 3 distinct normalized vectors. The exhaustive
    // assignment oracle (3^8 cases) confirms the optimal WCSS is 0, and the
    // learned centroids must be exactly the source vectors (any order).
    let vectors = distinct_patch_vectors();
    let patches: Vec<Vec<f64>> = [0usize, 1, 2, 0, 1, 2, 0, 1]
        .iter()
        .map(|&i| vectors[i].clone())
        .collect();
    let n = patches.len();
    let k = 3;

    let mut best = f64::INFINITY;
    let mut assignment = vec![0usize; n];
    loop {
        best = best.min(wcss_of(&assignment, &patches, k));
        // Odometer over k^n assignments.
        let mut pos = 0;
        loop {
            if pos == n {
                break;
            }
            assignment[pos] += 1;
            if assignment[pos] < k {
                break;
            }
            assignment[pos] = 0;
            pos += 1;
        }
        if pos == n {
            break;
        }
    }
    assert_eq!(best, 0.0);

    let set = PatchSet::from_patches(3, patches).unwrap();
    let (bank, trace) = kmeans_filterbank_traced(&set, k, 5, 100).unwrap();
    assert!((trace.last().unwrap() - best).abs() < 1e-12);
    for v in &vectors {
        let found = bank.centroids().iter().any(|c| {
            c.weights()
                .iter()
                .zip(v)
                .all(|(a, b)| (a - b).abs() < 1e-9)
        });
        assert!(found, "vector not recovered");
    }
}

#[test]
fn kmeans_objective_non_increasing() {
    let img = kit::random_image(16, 16, 55);
    let set = extract_patches(&img, 3, 1).unwrap();
    let (_, trace) = kmeans_filterbank_traced(&set, 6, 3, 100).unwrap();
    assert!(trace.len() >= 2);
    for w in trace.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12), "wcss rose: {} -> {}", w[0], w[1]);
    }
}

#[test]
fn kmeans_invariant_to_patch_order() {
    let img = kit::random_image(12, 12, 61);
    let set = extract_patches(&img, 3, 1).unwrap();
    let mut reversed: Vec<Vec<f64>> = set.patches().to_vec();
    reversed.reverse();
    let set_rev = PatchSet::from_patches(3, reversed).unwrap();
    let a = kmeans_filterbank(&set, 4, 77, 60).unwrap();
    let b = kmeans_filterbank(&set_rev, 4, 77, 60).unwrap();
    for (ka, kb) in a.centroids().iter().zip(b.centroids()) {
        for (x, y) in ka.weights().iter().zip(kb.weights()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
