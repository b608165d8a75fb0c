//! Random-walker segmentation: per-label combinatorial Dirichlet problems
//! on the intensity-weighted 4-connected lattice.

use rayon::prelude::*;
use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::segment::{LabelMap, MarkerSet};

/// Relative conjugate-gradient residual target.
const CG_TOLERANCE: f64 = 1e-8;
/// Iteration cap factor: at most `10 * N` CG iterations.
const CG_ITER_FACTOR: usize = 10;

/// Segment by random walking: edge weights `w = exp(-beta (I_i - I_j)^2)` on
/// intensities rescaled to `[0, 1]`, Dirichlet boundary 1 at each label's
/// markers, solved per label with conjugate gradient.
///
/// Returns the argmax label map and the per-label probability images
/// (marker pixels carry probability 1 for their own label; probabilities
/// sum to 1 within the solver tolerance).
pub fn random_walker(img: &Image, markers: &MarkerSet, beta: f64) -> Result<(LabelMap, Vec<Image>)> {
    if !(beta > 0.0) {
        return Err(Error::parameter(format!("beta must be > 0, got {beta}")));
    }
    if !img.is_finite() {
        return Err(Error::contract("random_walker requires finite pixels".to_string()));
    }
    markers.check_bounds(img.width(), img.height())?;
    let labels = markers.distinct_labels();
    if labels.len() < 2 {
        return Err(Error::parameter(format!(
            "random walker needs at least 2 distinct labels, got {}",
            labels.len()
        )));
    }
    let (w, h) = (img.width(), img.height());
    let n = w * h;

    let mut seed = vec![0u32; n];
    for &(x, y, l) in markers.markers() {
        let i = y * w + x;
        if seed[i] != 0 && seed[i] != l {
            return Err(Error::contract(format!(
                "conflicting marker labels at ({x}, {y})"
            )));
        }
        seed[i] = l;
    }

    let norm = img.rescale_unit();
    // Horizontal edge (x,y)-(x+1,y) and vertical edge (x,y)-(x,y+1) weights.
    let mut wh = vec![0.0f64; if w > 1 { (w - 1) * h } else { 0 }];
    let mut wv = vec![0.0f64; if h > 1 { w * (h - 1) } else { 0 }];
    for y in 0..h {
        for x in 0..w.saturating_sub(1) {
            let d = norm.get(x, y) - norm.get(x + 1, y);
            wh[y * (w - 1) + x] = (-beta * d * d).exp();
        }
    }
    for y in 0..h.saturating_sub(1) {
        for x in 0..w {
            let d = norm.get(x, y) - norm.get(x, y + 1);
            wv[y * w + x] = (-beta * d * d).exp();
        }
    }

    // Every unlabeled pixel must reach a marker through positive-weight
    // edges, otherwise its Dirichlet block is singular.
    {
        let mut reached = vec![false; n];
        let mut queue = VecDeque::new();
        for i in 0..n {
            if seed[i] != 0 {
                reached[i] = true;
                queue.push_back(i);
            }
        }
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize, wgt: f64| {
                if wgt > 0.0 && !reached[j] {
                    reached[j] = true;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1, wh[y * (w - 1) + x - 1]);
            }
            if x + 1 < w {
                visit(i + 1, wh[y * (w - 1) + x]);
            }
            if y > 0 {
                visit(i - w, wv[(y - 1) * w + x]);
            }
            if y + 1 < h {
                visit(i + w, wv[y * w + x]);
            }
        }
        if reached.iter().any(|&r| !r) {
            return Err(Error::Singular(
                "unlabeled region disconnected from every marker".to_string(),
            ));
        }
    }

    // Unlabeled nodes in row-major order.
    let mut index = vec![usize::MAX; n];
    let mut unlabeled = Vec::new();
    for i in 0..n {
        if seed[i] == 0 {
            index[i] = unlabeled.len();
            unlabeled.push(i);
        }
    }
    let m = unlabeled.len();

    // Diagonal of the full Laplacian restricted to unlabeled nodes.
    let degree: Vec<f64> = unlabeled
        .iter()
        .map(|&i| {
            let (x, y) = (i % w, i / w);
            let mut d = 0.0;
            if x > 0 {
                d += wh[y * (w - 1) + x - 1];
            }
            if x + 1 < w {
                d += wh[y * (w - 1) + x];
            }
            if y > 0 {
                d += wv[(y - 1) * w + x];
            }
            if y + 1 < h {
                d += wv[y * w + x];
            }
            d
        })
        .collect();

    let matvec = |x_vec: &[f64], out: &mut [f64]| {
        for (k, &i) in unlabeled.iter().enumerate() {
            let (x, y) = (i % w, i / w);
            let mut acc = degree[k] * x_vec[k];
            if x > 0 && index[i - 1] != usize::MAX {
                acc -= wh[y * (w - 1) + x - 1] * x_vec[index[i - 1]];
            }
            if x + 1 < w && index[i + 1] != usize::MAX {
                acc -= wh[y * (w - 1) + x] * x_vec[index[i + 1]];
            }
            if y > 0 && index[i - w] != usize::MAX {
                acc -= wv[(y - 1) * w + x] * x_vec[index[i - w]];
            }
            if y + 1 < h && index[i + w] != usize::MAX {
                acc -= wv[y * w + x] * x_vec[index[i + w]];
            }
            out[k] = acc;
        }
    };

    let solve_label = |label: u32| -> Vec<f64> {
        let mut b = vec![0.0f64; m];
        for (k, &i) in unlabeled.iter().enumerate() {
            let (x, y) = (i % w, i / w);
            let mut acc = 0.0;
            if x > 0 && seed[i - 1] == label {
                acc += wh[y * (w - 1) + x - 1];
            }
            if x + 1 < w && seed[i + 1] == label {
                acc += wh[y * (w - 1) + x];
            }
            if y > 0 && seed[i - w] == label {
                acc += wv[(y - 1) * w + x];
            }
            if y + 1 < h && seed[i + w] == label {
                acc += wv[y * w + x];
            }
            b[k] = acc;
        }
        conjugate_gradient(&matvec, &b, CG_TOLERANCE, CG_ITER_FACTOR * m.max(1))
    };

    let solutions: Vec<Vec<f64>> = labels.par_iter().map(|&l| solve_label(l)).collect();

    let mut probabilities = Vec::with_capacity(labels.len());
    for (l_idx, label) in labels.iter().enumerate() {
        let mut plane = Image::new(w, h)?;
        for i in 0..n {
            let v = if seed[i] != 0 {
                f64::from(seed[i] == *label)
            } else {
                solutions[l_idx][index[i]].clamp(0.0, 1.0)
            };
            plane.set(i % w, i / w, v);
        }
        probabilities.push(plane);
    }

    let mut out = LabelMap::new(w, h)?;
    for i in 0..n {
        let (x, y) = (i % w, i / w);
        if seed[i] != 0 {
            out.set(x, y, seed[i]);
            continue;
        }
        let mut best = 0usize;
        let mut best_p = f64::NEG_INFINITY;
        for (l_idx, plane) in probabilities.iter().enumerate() {
            let p = plane.get(x, y);
            if p > best_p {
                best_p = p;
                best = l_idx;
            }
        }
        out.set(x, y, labels[best]);
    }
    Ok((out, probabilities))
}

/// Unpreconditioned conjugate gradient for a symmetric positive-definite
/// operator, starting from zero.
fn conjugate_gradient(
    matvec: &impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    if n == 0 {
        return x;
    }
    let norm_b = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm_b == 0.0 {
        return x;
    }
    let target = rel_tol * norm_b;
    let mut r = b.to_vec();
    let mut p = b.to_vec();
    let mut ap = vec![0.0; n];
    let mut rs = r.iter().map(|v| v * v).sum::<f64>();
    for _ in 0..max_iter {
        if rs.sqrt() <= target {
            break;
        }
        matvec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            break;
        }
        let alpha = rs / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rs_new / rs;
        rs = rs_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segment::MarkerDerivation;

    #[test]
    fn two_tone_split_is_exact() {
        let img = Image::from_fn(8, 8, |x, _| f64::from(x >= 4)).unwrap();
        let markers = MarkerSet::new(vec![(0, 4, 1), (7, 4, 2)], MarkerDerivation::Manual).unwrap();
        let (labels, probs) = random_walker(&img, &markers, 90.0).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                assert_eq!(labels.get(x, y), if x < 4 { 1 } else { 2 }, "at ({x},{y})");
            }
        }
        for y in 0..8 {
            for x in 0..8 {
                let total: f64 = probs.iter().map(|p| p.get(x, y)).sum();
                assert!((total - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn marker_pixels_have_unit_probability() {
        let img = Image::from_fn(6, 6, |x, y| ((x + y) % 3) as f64 / 3.0).unwrap();
        let markers = MarkerSet::new(vec![(1, 1, 1), (4, 4, 2)], MarkerDerivation::Manual).unwrap();
        let (_, probs) = random_walker(&img, &markers, 50.0).unwrap();
        assert_eq!(probs[0].get(1, 1), 1.0);
        assert_eq!(probs[1].get(1, 1), 0.0);
        assert_eq!(probs[1].get(4, 4), 1.0);
    }

    #[test]
    fn needs_two_labels() {
        let img = Image::new(4, 4).unwrap();
        let markers = MarkerSet::new(vec![(0, 0, 1), (3, 3, 1)], MarkerDerivation::Manual).unwrap();
        match random_walker(&img, &markers, 90.0) {
            Err(Error::Parameter(_)) => {}
            other => panic!("expected parameter error, got {other:?}"),
        }
    }

    #[test]
    fn label_flip_permutes_output() {
        let img = Image::from_fn(8, 8, |x, y| ((x * 3 + y * 5) % 7) as f64 / 7.0).unwrap();
        let a = MarkerSet::new(vec![(0, 0, 1), (7, 7, 2)], MarkerDerivation::Manual).unwrap();
        let b = MarkerSet::new(vec![(0, 0, 2), (7, 7, 1)], MarkerDerivation::Manual).unwrap();
        let (la, pa) = random_walker(&img, &a, 90.0).unwrap();
        let (lb, pb) = random_walker(&img, &b, 90.0).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                assert_eq!(la.get(x, y), 3 - lb.get(x, y));
                assert_eq!(pa[0].get(x, y).to_bits(), pb[1].get(x, y).to_bits());
                assert_eq!(pa[1].get(x, y).to_bits(), pb[0].get(x, y).to_bits());
            }
        }
    }
}
