//! Power-spectrum and radial-profile invariants.

use astroproc::image::Image;
use astroproc::spectrum::{power_spectrum_2d, radial_average};
use astroproc_testkit as kit;

#[test]
fn power_spectrum_matches_naive_dft() {
    for (w, h, seed) in [(8usize, 8usize, 1u64), (9, 7, 2), (6, 11, 3)] {
        let img = kit::random_image(w, h, seed);
        let p = power_spectrum_2d(&img);
        let (re, im) = kit::naive_dft2(&img);
        let (cx, cy) = (w / 2, h / 2);
        for y in 0..h {
            for x in 0..w {
                let sx = (x + w - cx) % w;
                let sy = (y + h - cy) % h;
                let want = re[sy * w + sx] * re[sy * w + sx] + im[sy * w + sx] * im[sy * w + sx];
                assert!((p.get(x, y) - want).abs() < 1e-7, "({x},{y})");
            }
        }
    }
}

#[test]
fn parseval_through_the_pipeline() {
    for seed in 0..10u64 {
        let w = 6 + (seed as usize * 9) % 59;
        let h = 6 + (seed as usize * 13) % 59;
        let img = kit::random_image(w, h, 40 + seed);
        let p = power_spectrum_2d(&img);
        let lhs: f64 = p.data().iter().sum();
        let rhs: f64 = (w * h) as f64 * img.data().iter().map(|v| v * v).sum::<f64>();
        assert!((lhs - rhs).abs() <= 1e-6 * rhs, "{w}x{h}");
    }
}

#[test]
fn radial_profile_invariant_under_quarter_rotation() {
    for (n, seed) in [(16usize, 5u64), (17, 6), (32, 7)] {
        let img = kit::random_image(n, n, seed);
        let rot = Image::from_fn(n, n, |x, y| img.get(y, n - 1 - x)).unwrap();
        let s1 = radial_average(&power_spectrum_2d(&img), n / 2).unwrap();
        let s2 = radial_average(&power_spectrum_2d(&rot), n / 2).unwrap();
        assert_eq!(s1.counts, s2.counts, "n={n}");
        for (a, b) in s1.radial_power.iter().zip(&s2.radial_power) {
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "n={n}");
        }
    }
}

#[test]
fn counts_partition_every_size() {
    for (w, h) in [(5usize, 9usize), (16, 16), (31, 8)] {
        let img = kit::random_image(w, h, 9);
        let p = power_spectrum_2d(&img);
        for nbins in [1usize, 3, 8] {
            let s = radial_average(&p, nbins).unwrap();
            assert_eq!(s.counts.iter().sum::<usize>(), w * h);
            let binned: f64 = s
                .radial_power
                .iter()
                .zip(&s.counts)
                .map(|(&m, &c)| m * c as f64)
                .sum();
            let direct: f64 = p.data().iter().sum();
            assert!((binned - direct).abs() <= 1e-12 * direct.abs().max(1.0));
        }
    }
}
