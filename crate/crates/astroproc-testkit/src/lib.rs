//! Brute-force reference implementations and synthetic fixtures used to
//! validate the main crate.
//!
//! Everything here is written as the most literal evaluation of each
//! definition — nested loops, per-pixel floods, dense solves — independent
//! of the production code paths it checks. Only the data types are shared.

use astroproc::image::{BoundaryMode, Image, Kernel};
use astroproc::morphology::Connectivity;
use astroproc::segment::LabelMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Independent boundary resolution (reference for `Image::sample`).
fn fetch(img: &Image, x: isize, y: isize, mode: BoundaryMode) -> f64 {
    let coord = |p: isize, n: usize| -> Option<usize> {
        let n_i = n as isize;
        if p >= 0 && p < n_i {
            return Some(p as usize);
        }
        match mode {
            BoundaryMode::Zero => None,
            BoundaryMode::Replicate => Some(p.clamp(0, n_i - 1) as usize),
            BoundaryMode::Reflect => {
                if n == 1 {
                    return Some(0);
                }
                let mut q = p;
                loop {
                    if q < 0 {
                        q = -q;
                    } else if q >= n_i {
                        q = 2 * (n_i - 1) - q;
                    } else {
                        return Some(q as usize);
                    }
                }
            }
        }
    };
    match (coord(x, img.width()), coord(y, img.height())) {
        (Some(sx), Some(sy)) => img.get(sx, sy),
        _ => 0.0,
    }
}

/// Direct double-loop true convolution.
pub fn naive_convolve2d(img: &Image, k: &Kernel, mode: BoundaryMode) -> Image {
    let (cx, cy) = ((k.width() / 2) as isize, (k.height() / 2) as isize);
    Image::from_fn(img.width(), img.height(), |x, y| {
        let mut acc = 0.0;
        for ky in 0..k.height() as isize {
            for kx in 0..k.width() as isize {
                let w = k.get(kx as usize, ky as usize);
                acc += w * fetch(img, x as isize - (kx - cx), y as isize - (ky - cy), mode);
            }
        }
        acc
    })
    .expect("valid dims")
}

/// O(N^4) literal DFT: `X[u,v] = sum_xy I[x,y] e^{-2 pi i (ux/W + vy/H)}`.
/// Returns (re, im) planes.
pub fn naive_dft2(img: &Image) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (img.width(), img.height());
    let mut re = vec![0.0; w * h];
    let mut im = vec![0.0; w * h];
    for v in 0..h {
        for u in 0..w {
            let mut acc_re = 0.0;
            let mut acc_im = 0.0;
            for y in 0..h {
                for x in 0..w {
                    let angle = -2.0
                        * std::f64::consts::PI
                        * (u as f64 * x as f64 / w as f64 + v as f64 * y as f64 / h as f64);
                    let val = img.get(x, y);
                    acc_re += val * angle.cos();
                    acc_im += val * angle.sin();
                }
            }
            re[v * w + u] = acc_re;
            im[v * w + u] = acc_im;
        }
    }
    (re, im)
}

/// Per-pixel plateau flood: a pixel is a regional maximum iff a fresh BFS of
/// its equal-value plateau finds no strictly greater neighbor.
pub fn plateau_maxima(img: &Image, conn: Connectivity) -> Vec<bool> {
    let (w, h) = (img.width(), img.height());
    let mut out = vec![false; w * h];
    for start_y in 0..h {
        for start_x in 0..w {
            let level = img.get(start_x, start_y);
            let mut seen = vec![false; w * h];
            let mut stack = vec![(start_x, start_y)];
            seen[start_y * w + start_x] = true;
            let mut is_max = true;
            while let Some((x, y)) = stack.pop() {
                for &(dx, dy) in conn.offsets() {
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let (nxu, nyu) = (nx as usize, ny as usize);
                    let v = img.get(nxu, nyu);
                    if v > level {
                        is_max = false;
                    } else if v == level && !seen[nyu * w + nxu] {
                        seen[nyu * w + nxu] = true;
                        stack.push((nxu, nyu));
                    }
                }
            }
            out[start_y * w + start_x] = is_max;
        }
    }
    out
}

/// Geodesic reconstruction by literal iteration: dilate the marker one step,
/// clip under the mask, repeat until nothing changes.
pub fn iterative_reconstruct(marker: &Image, mask: &Image, conn: Connectivity) -> Image {
    let (w, h) = (marker.width(), marker.height());
    let mut cur = marker.clone();
    loop {
        let mut next = cur.clone();
        let mut changed = false;
        for y in 0..h {
            for x in 0..w {
                let mut v = cur.get(x, y);
                for &(dx, dy) in conn.offsets() {
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    v = v.max(cur.get(nx as usize, ny as usize));
                }
                let v = v.min(mask.get(x, y));
                if v != next.get(x, y) {
                    changed = true;
                }
                next.set(x, y, v);
            }
        }
        cur = next;
        if !changed {
            return cur;
        }
    }
}

/// Exhaustive nearest-background scan: for each foreground pixel, the
/// minimum Euclidean distance over every background pixel.
pub fn brute_distance_transform(mask: &LabelMap) -> Image {
    let (w, h) = (mask.width(), mask.height());
    Image::from_fn(w, h, |x, y| {
        if mask.get(x, y) == 0 {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for by in 0..h {
            for bx in 0..w {
                if mask.get(bx, by) == 0 {
                    let dx = x as f64 - bx as f64;
                    let dy = y as f64 - by as f64;
                    let d2 = dx * dx + dy * dy;
                    if d2 < best {
                        best = d2;
                    }
                }
            }
        }
        best.sqrt()
    })
    .expect("valid dims")
}

/// Literal quadruple-loop non-local means with the caller-supplied noise
/// level. Patch reads go through Reflect padding; the search window is
/// clipped to the image.
pub fn naive_nlm(
    img: &Image,
    patch_radius: usize,
    search_radius: usize,
    h_strength: f64,
    gaussian_sigma: Option<f64>,
    sigma_est: f64,
) -> Image {
    let (w, h) = (img.width(), img.height());
    let pr = patch_radius as isize;
    let sr = search_radius as isize;
    let mut spatial = Vec::new();
    for dy in -pr..=pr {
        for dx in -pr..=pr {
            let wgt = match gaussian_sigma {
                None => 1.0,
                Some(s) => (-((dx * dx + dy * dy) as f64) / (2.0 * s * s)).exp(),
            };
            spatial.push(wgt);
        }
    }
    let total: f64 = spatial.iter().sum();
    for v in &mut spatial {
        *v /= total;
    }
    let var_term = 2.0 * sigma_est * sigma_est;
    Image::from_fn(w, h, |x, y| {
        let (x, y) = (x as isize, y as isize);
        let mut num = 0.0;
        let mut den = 0.0;
        for sy in (y - sr).max(0)..=(y + sr).min(h as isize - 1) {
            for sx in (x - sr).max(0)..=(x + sr).min(w as isize - 1) {
                let mut d2 = 0.0;
                let mut wi = 0;
                for dy in -pr..=pr {
                    for dx in -pr..=pr {
                        let a = fetch(img, x + dx, y + dy, BoundaryMode::Reflect);
                        let b = fetch(img, sx + dx, sy + dy, BoundaryMode::Reflect);
                        d2 += spatial[wi] * (a - b) * (a - b);
                        wi += 1;
                    }
                }
                let wgt = (-((d2 - var_term).max(0.0)) / (h_strength * h_strength)).exp();
                num += wgt * img.get(sx as usize, sy as usize);
                den += wgt;
            }
        }
        num / den
    })
    .expect("valid dims")
}

/// Dense Gaussian-elimination solve of the random-walker Dirichlet system
/// for one label, for small instances. Returns per-pixel probabilities.
pub fn dense_random_walker_probability(
    img: &Image,
    seeds: &[(usize, usize, u32)],
    label: u32,
    beta: f64,
) -> Vec<f64> {
    let (w, h) = (img.width(), img.height());
    let n = w * h;
    let norm = img.rescale_unit();
    let weight = |a: usize, b: usize| -> f64 {
        let d = norm.data()[a] - norm.data()[b];
        (-beta * d * d).exp()
    };
    let mut seed = vec![0u32; n];
    for &(x, y, l) in seeds {
        seed[y * w + x] = l;
    }
    let unlabeled: Vec<usize> = (0..n).filter(|&i| seed[i] == 0).collect();
    let index: Vec<usize> = {
        let mut ix = vec![usize::MAX; n];
        for (k, &i) in unlabeled.iter().enumerate() {
            ix[i] = k;
        }
        ix
    };
    let m = unlabeled.len();
    let mut a = vec![vec![0.0f64; m]; m];
    let mut b = vec![0.0f64; m];
    for (k, &i) in unlabeled.iter().enumerate() {
        let (x, y) = (i % w, i / w);
        let mut neighbors = Vec::new();
        if x > 0 {
            neighbors.push(i - 1);
        }
        if x + 1 < w {
            neighbors.push(i + 1);
        }
        if y > 0 {
            neighbors.push(i - w);
        }
        if y + 1 < h {
            neighbors.push(i + w);
        }
        let mut degree = 0.0;
        for &j in &neighbors {
            let wgt = weight(i, j);
            degree += wgt;
            if seed[j] == 0 {
                a[k][index[j]] -= wgt;
            } else if seed[j] == label {
                b[k] += wgt;
            }
        }
        a[k][k] = degree;
    }
    let x = gaussian_elimination(a, b);
    let mut out = vec![0.0; n];
    for i in 0..n {
        out[i] = if seed[i] != 0 {
            f64::from(seed[i] == label)
        } else {
            x[index[i]]
        };
    }
    out
}

fn gaussian_elimination(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty");
        a.swap(col, pivot);
        b.swap(col, pivot);
        let diag = a[col][col];
        assert!(diag.abs() > 0.0, "singular dense system");
        for row in col + 1..n {
            let f = a[row][col] / diag;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x
}

/// Deterministic uniform image in `[0, 1)`.
pub fn random_image(width: usize, height: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Image::from_fn(width, height, |_, _| rng.gen::<f64>()).expect("valid dims")
}

/// Deterministic kernel with weights in `[-1, 1)`, odd dimensions.
pub fn random_kernel(width: usize, height: usize, seed: u64) -> Kernel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = (0..width * height).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
    Kernel::from_vec(width, height, weights).expect("valid dims")
}

/// Deterministic binary mask with roughly `fill` foreground fraction.
pub fn random_mask(width: usize, height: usize, fill: f64, seed: u64) -> LabelMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = (0..width * height)
        .map(|_| u32::from(rng.gen::<f64>() < fill))
        .collect();
    LabelMap::from_vec(width, height, labels).expect("valid dims")
}

/// Values quantized to multiples of `1/levels`, so plateaus occur.
pub fn quantized_image(width: usize, height: usize, levels: u32, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Image::from_fn(width, height, |_, _| {
        f64::from(rng.gen_range(0..levels)) / f64::from(levels)
    })
    .expect("valid dims")
}

/// Binary disk fixture: intensity 1 inside the circle, 0 outside.
pub fn disk_image(width: usize, height: usize, cx: f64, cy: f64, r: f64) -> Image {
    Image::from_fn(width, height, |x, y| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        f64::from(dx * dx + dy * dy <= r * r)
    })
    .expect("valid dims")
}

/// Add unclipped Gaussian noise with the given seed.
pub fn add_gaussian_noise(img: &Image, sigma: f64, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("valid sigma");
    let data = img.data().iter().map(|v| v + normal.sample(&mut rng)).collect();
    Image::from_vec(img.width(), img.height(), data).expect("valid dims")
}

/// Flip a fraction `amount` of pixels to 0 or 1 with equal probability.
pub fn add_salt_pepper(img: &Image, amount: f64, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = img
        .data()
        .iter()
        .map(|&v| {
            if rng.gen::<f64>() < amount {
                f64::from(rng.gen::<bool>())
            } else {
                v
            }
        })
        .collect();
    Image::from_vec(img.width(), img.height(), data).expect("valid dims")
}
