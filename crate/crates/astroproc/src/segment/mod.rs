//! Segmentation: Chan-Vese level sets, random-walker diffusion, and
//! marker-based watershed with exact Euclidean distance mapping for
//! splitting overlapping objects.

mod chan_vese;
mod random_walker;
mod watershed;

pub use chan_vese::{chan_vese, chan_vese_observed, ChanVeseParams, ChanVeseResult};
pub use random_walker::random_walker;
pub use watershed::watershed;

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::morphology::{regional_maxima, Connectivity};
use crate::stats::quantile;

/// 2-D integer label field; 0 is background/unlabeled where applicable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::dimension("label map dimensions must be >= 1".to_string()));
        }
        Ok(LabelMap { width, height, labels: vec![0; width * height] })
    }

    pub fn from_vec(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::dimension("label buffer does not match dimensions".to_string()));
        }
        if width == 0 || height == 0 {
            return Err(Error::dimension("label map dimensions must be >= 1".to_string()));
        }
        Ok(LabelMap { width, height, labels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u32) {
        self.labels[y * self.width + x] = v;
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// All labels are 0 or 1.
    pub fn is_binary(&self) -> bool {
        self.labels.iter().all(|&l| l <= 1)
    }

    /// Distinct labels in ascending order.
    pub fn distinct_labels(&self) -> Vec<u32> {
        let mut ls: Vec<u32> = self.labels.to_vec();
        ls.sort_unstable();
        ls.dedup();
        ls
    }

    /// Fraction of pixels on which two label maps agree.
    pub fn agreement(&self, other: &LabelMap) -> Result<f64> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::dimension("agreement requires equal dimensions".to_string()));
        }
        let same = self
            .labels
            .iter()
            .zip(&other.labels)
            .filter(|(a, b)| a == b)
            .count();
        Ok(same as f64 / self.labels.len() as f64)
    }
}

/// How a marker set was produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarkerDerivation {
    Manual,
    HistogramTails { low_quantile: f64, high_quantile: f64 },
}

/// Seed pixels `(x, y, label)` with labels >= 1.
#[derive(Debug, Clone)]
pub struct MarkerSet {
    markers: Vec<(usize, usize, u32)>,
    derivation: MarkerDerivation,
}

impl MarkerSet {
    pub fn new(markers: Vec<(usize, usize, u32)>, derivation: MarkerDerivation) -> Result<Self> {
        if markers.is_empty() {
            return Err(Error::contract("marker set must not be empty".to_string()));
        }
        if markers.iter().any(|&(_, _, l)| l == 0) {
            return Err(Error::contract("marker labels must be >= 1".to_string()));
        }
        Ok(MarkerSet { markers, derivation })
    }

    pub fn markers(&self) -> &[(usize, usize, u32)] {
        &self.markers
    }

    pub fn derivation(&self) -> MarkerDerivation {
        self.derivation
    }

    pub fn distinct_labels(&self) -> Vec<u32> {
        let mut ls: Vec<u32> = self.markers.iter().map(|&(_, _, l)| l).collect();
        ls.sort_unstable();
        ls.dedup();
        ls
    }

    pub(crate) fn check_bounds(&self, width: usize, height: usize) -> Result<()> {
        for &(x, y, _) in &self.markers {
            if x >= width || y >= height {
                return Err(Error::contract(format!(
                    "marker ({x}, {y}) outside {width}x{height}"
                )));
            }
        }
        Ok(())
    }
}

/// Derive markers from the histogram tails: pixels at or below the `low_q`
/// quantile become label 1 (background), pixels at or above the `high_q`
/// quantile become label 2 (object). Quantiles use sorting with midpoint
/// interpolation; a degenerate histogram (equal thresholds) is an error.
pub fn markers_from_histogram(img: &Image, low_q: f64, high_q: f64) -> Result<MarkerSet> {
    if !(0.0 < low_q && low_q < high_q && high_q < 1.0) {
        return Err(Error::parameter(format!(
            "quantiles must satisfy 0 < low < high < 1, got ({low_q}, {high_q})"
        )));
    }
    if !img.is_finite() {
        return Err(Error::contract("histogram markers require finite pixels".to_string()));
    }
    let t_low = quantile(img.data(), low_q)?;
    let t_high = quantile(img.data(), high_q)?;
    if t_low == t_high {
        return Err(Error::singular(format!(
            "histogram tails coincide at {t_low}; cannot derive two marker classes"
        )));
    }
    let mut markers = Vec::new();
    for y in 0..img.height() {
        for x in 0..img.width() {
            let v = img.get(x, y);
            if v <= t_low {
                markers.push((x, y, 1));
            } else if v >= t_high {
                markers.push((x, y, 2));
            }
        }
    }
    MarkerSet::new(markers, MarkerDerivation::HistogramTails { low_quantile: low_q, high_quantile: high_q })
}

/// Exact Euclidean distance from each foreground pixel to the nearest
/// background pixel; background pixels carry 0.
///
/// A mask with no background yields `+inf` at every pixel (documented
/// sentinel: the frame edge does not count as background).
pub fn distance_transform(mask: &LabelMap) -> Result<Image> {
    if !mask.is_binary() {
        return Err(Error::contract("distance transform requires a binary mask".to_string()));
    }
    let (w, h) = (mask.width(), mask.height());
    // Squared-distance transform, one axis at a time (lower envelope of
    // parabolas), exact in integer arithmetic represented in f64.
    let mut col = vec![0.0f64; h.max(w)];
    let mut grid = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            grid[y * w + x] = if mask.get(x, y) == 0 { 0.0 } else { f64::INFINITY };
        }
    }
    let mut out_line = vec![0.0f64; h.max(w)];
    for x in 0..w {
        for y in 0..h {
            col[y] = grid[y * w + x];
        }
        dt1d(&col[..h], &mut out_line[..h]);
        for y in 0..h {
            grid[y * w + x] = out_line[y];
        }
    }
    let mut row = vec![0.0f64; w];
    for y in 0..h {
        row.copy_from_slice(&grid[y * w..(y + 1) * w]);
        dt1d(&row, &mut out_line[..w]);
        grid[y * w..(y + 1) * w].copy_from_slice(&out_line[..w]);
    }
    for v in &mut grid {
        *v = v.sqrt();
    }
    Image::from_vec(w, h, grid)
}

/// 1-D squared distance transform: `out[i] = min_j (i-j)^2 + f[j]`.
fn dt1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n]; // parabola apexes
    let mut z = vec![0.0f64; n + 1]; // envelope breakpoints
    let mut k = 0usize;
    let mut started = false;
    for q in 0..n {
        if f[q].is_infinite() {
            continue;
        }
        if !started {
            v[0] = q;
            z[0] = f64::NEG_INFINITY;
            z[1] = f64::INFINITY;
            started = true;
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] {
                if k == 0 {
                    v[0] = q;
                    z[0] = f64::NEG_INFINITY;
                    z[1] = f64::INFINITY;
                    break;
                }
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    if !started {
        out[..n].fill(f64::INFINITY);
        return;
    }
    let mut k = 0usize;
    for (q, o) in out.iter_mut().enumerate().take(n) {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let d = q as f64 - p as f64;
        *o = d * d + f[p];
    }
}

/// Split touching objects in a binary mask: exact distance transform, peak
/// detection with a minimum separation, then watershed flooding of the
/// negated distance restricted to the foreground.
///
/// Returns the split labels (1..=n on foreground, 0 on background) and the
/// distance field.
pub fn split_overlapping(mask: &LabelMap, peak_min_distance: f64) -> Result<(LabelMap, Image)> {
    if !mask.is_binary() {
        return Err(Error::contract("split_overlapping requires a binary mask".to_string()));
    }
    if !(peak_min_distance >= 0.0) {
        return Err(Error::parameter("peak_min_distance must be >= 0".to_string()));
    }
    let (w, h) = (mask.width(), mask.height());
    let fg_count = mask.labels().iter().filter(|&&l| l == 1).count();
    if fg_count == 0 {
        return Err(Error::contract("mask has no foreground to split".to_string()));
    }
    let dist = distance_transform(mask)?;
    if fg_count == w * h {
        // No background anywhere: one object filling the frame.
        let labels = LabelMap::from_vec(w, h, vec![1; w * h])?;
        return Ok((labels, dist));
    }

    // Candidate peaks: representatives of the regional-maxima plateaus of
    // the distance field, restricted to the foreground.
    let maxima = regional_maxima(&dist, Connectivity::Eight)?;
    let components = label_components(mask, Connectivity::Eight);
    let mut seen = vec![false; w * h];
    let mut candidates: Vec<(f64, usize, u32)> = Vec::new(); // (value, index, component)
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if seen[start] || !maxima.as_slice()[start] || mask.labels()[start] == 0 {
            continue;
        }
        // Flood this plateau; `start` is its row-major representative.
        seen[start] = true;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            for &(dx, dy) in Connectivity::Eight.offsets() {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if maxima.as_slice()[j] && !seen[j] && dist.data()[j] == dist.data()[start] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        candidates.push((dist.data()[start], start, components[start]));
    }
    candidates.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    // Greedy separation, then make sure no component loses all its peaks.
    let mut kept: Vec<(usize, u32)> = Vec::new();
    let min_d2 = peak_min_distance * peak_min_distance;
    for &(_, idx, comp) in &candidates {
        let (x, y) = ((idx % w) as f64, (idx / w) as f64);
        let far_enough = kept.iter().all(|&(kidx, _)| {
            let (kx, ky) = ((kidx % w) as f64, (kidx / w) as f64);
            (x - kx) * (x - kx) + (y - ky) * (y - ky) >= min_d2
        });
        if far_enough {
            kept.push((idx, comp));
        }
    }
    for &(_, idx, comp) in &candidates {
        if !kept.iter().any(|&(_, c)| c == comp) {
            kept.push((idx, comp));
        }
    }

    let markers: Vec<(usize, usize, u32)> = kept
        .iter()
        .enumerate()
        .map(|(i, &(idx, _))| (idx % w, idx / w, i as u32 + 1))
        .collect();
    let marker_set = MarkerSet::new(markers, MarkerDerivation::Manual)?;
    let relief = dist.map(|v| -v);
    let fg: Vec<bool> = mask.labels().iter().map(|&l| l == 1).collect();
    let labels = watershed::flood(&relief, &marker_set, Connectivity::Eight, Some(&fg))?;
    Ok((labels, dist))
}

/// Connected-component ids (1-based) over foreground pixels; 0 elsewhere.
fn label_components(mask: &LabelMap, conn: Connectivity) -> Vec<u32> {
    let (w, h) = (mask.width(), mask.height());
    let mut comp = vec![0u32; w * h];
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if mask.labels()[start] == 0 || comp[start] != 0 {
            continue;
        }
        next += 1;
        comp[start] = next;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            for &(dx, dy) in conn.offsets() {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if mask.labels()[j] == 1 && comp[j] == 0 {
                    comp[j] = next;
                    queue.push_back(j);
                }
            }
        }
    }
    comp
}
