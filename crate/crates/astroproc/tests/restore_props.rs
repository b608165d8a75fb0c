//! Self-tuned restoration against the exhaustive grid MSE oracle.

use astroproc::image::{convolve2d, BoundaryMode};
use astroproc::restore::{log_spaced_grid, self_tuned_wiener, wiener_deconvolve, gaussian_psf, WienerSpec};
use astroproc::stats::mse;
use astroproc_testkit as kit;

/// Galaxy-shaped clean fixture: elliptical exponential profile plus a faint
/// companion, so the scene carries mid- and high-frequency structure.
fn galaxy_fixture(n: usize) -> astroproc::image::Image {
    astroproc::image::Image::from_fn(n, n, |x, y| {
        let (dx, dy) = (x as f64 - n as f64 * 0.45, y as f64 - n as f64 * 0.5);
        let (c, s) = (0.5f64.cos(), 0.5f64.sin());
        let xp = dx * c + dy * s;
        let yp = -dx * s + dy * c;
        let r1 = (xp * xp + (yp / 0.6) * (yp / 0.6)).sqrt();
        let (ex, ey) = (x as f64 - n as f64 * 0.75, y as f64 - n as f64 * 0.3);
        let r2 = (ex * ex + ey * ey).sqrt();
        (0.9 * (-r1 / 6.0).exp() + 0.5 * (-r2 / 3.0).exp()).min(1.0)
    })
    .unwrap()
}

#[test]
fn self_tuning_lands_near_the_grid_optimum() {
    // Blur + noise synthetic with a known clean image; the whiteness-chosen
    // candidate must be within 5% (in clean-image MSE) of the best grid
    // candidate found by exhaustive search.
    let clean = galaxy_fixture(48);
    let psf = gaussian_psf(2.0, 6).unwrap();
    let blurred = convolve2d(&clean, &psf, BoundaryMode::Zero).unwrap();
    let noisy = kit::add_gaussian_noise(&blurred, 0.05, 99);

    let grid = log_spaced_grid(1e-4, 1.0, 25);
    let (restored, report) = self_tuned_wiener(&noisy, &psf, &grid).unwrap();

    let mut best_mse = f64::INFINITY;
    for &nsr in &grid {
        let spec = WienerSpec::new(psf.clone(), nsr).unwrap();
        let candidate = wiener_deconvolve(&noisy, &spec).unwrap();
        best_mse = best_mse.min(mse(&clean, &candidate).unwrap());
    }
    let chosen_mse = mse(&clean, &restored).unwrap();
    assert!(
        chosen_mse <= 1.05 * best_mse,
        "chosen nsr {} gives mse {chosen_mse}, grid best {best_mse}",
        report.chosen_nsr
    );
}

#[test]
fn delta_blur_identity_for_small_nsr() {
    let img = kit::random_image(16, 16, 5);
    let delta = astroproc::image::Kernel::from_vec(1, 1, vec![1.0]).unwrap();
    for nsr in [1e-12, 1e-9, 1e-8] {
        let spec = WienerSpec::new(delta.clone(), nsr).unwrap();
        let out = wiener_deconvolve(&img, &spec).unwrap();
        for (a, b) in out.data().iter().zip(img.data()) {
            assert!((a - b).abs() < 1e-6, "nsr {nsr}");
        }
    }
}
