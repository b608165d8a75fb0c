//! Regional extrema and the h-maxima transform.
//!
//! A regional maximum is a connected plateau of equal intensity with no
//! strictly greater neighbor. The h-maxima transform suppresses maxima whose
//! local contrast is below `h` by geodesically reconstructing `img - h`
//! under `img` and taking the regional maxima of the result.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::image::Image;

/// Pixel neighborhood used by plateau and flooding operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

impl Connectivity {
    /// Neighbor offsets in a fixed scan order.
    pub fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &[(0, -1), (0, 1), (-1, 0), (1, 0)],
            Connectivity::Eight => &[
                (0, -1),
                (0, 1),
                (-1, 0),
                (1, 0),
                (-1, -1),
                (1, -1),
                (-1, 1),
                (1, 1),
            ],
        }
    }
}

/// Boolean mask marking pixels that belong to regional-extremum plateaus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtremaMask {
    width: usize,
    height: usize,
    mask: Vec<bool>,
}

impl ExtremaMask {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::dimension("mask dimensions must be >= 1".to_string()));
        }
        Ok(ExtremaMask { width, height, mask: vec![false; width * height] })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.mask[y * self.width + x] = v;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.mask
    }

    /// Number of marked pixels.
    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// Number of connected marked plateaus.
    pub fn component_count(&self, conn: Connectivity) -> usize {
        let mut seen = vec![false; self.mask.len()];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for start in 0..self.mask.len() {
            if !self.mask[start] || seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(i) = queue.pop_front() {
                let (x, y) = (i % self.width, i / self.width);
                for &(dx, dy) in conn.offsets() {
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    if nx < 0 || ny < 0 || nx >= self.width as isize || ny >= self.height as isize {
                        continue;
                    }
                    let j = ny as usize * self.width + nx as usize;
                    if self.mask[j] && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        count
    }
}

/// Mark every pixel whose connected equal-valued plateau has no strictly
/// greater neighbor.
pub fn regional_maxima(img: &Image, conn: Connectivity) -> Result<ExtremaMask> {
    if !img.is_finite() {
        return Err(Error::contract("regional_maxima requires finite pixels".to_string()));
    }
    let (w, h) = (img.width(), img.height());
    let mut mask = ExtremaMask::new(w, h)?;
    let mut visited = vec![false; w * h];
    let mut plateau = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if visited[start] {
            continue;
        }
        let level = img.data()[start];
        visited[start] = true;
        queue.push_back(start);
        plateau.clear();
        let mut is_max = true;
        while let Some(i) = queue.pop_front() {
            plateau.push(i);
            let (x, y) = (i % w, i / w);
            for &(dx, dy) in conn.offsets() {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                let v = img.data()[j];
                if v > level {
                    is_max = false;
                } else if v == level && !visited[j] {
                    visited[j] = true;
                    queue.push_back(j);
                }
            }
        }
        if is_max {
            for &i in &plateau {
                mask.mask[i] = true;
            }
        }
    }
    Ok(mask)
}

/// Grayscale reconstruction of `marker` under `mask` by repeated geodesic
/// dilation: the largest image <= `mask` reachable from `marker`.
///
/// Uses the raster forward/backward sweep followed by a FIFO queue, which
/// reaches the same fixed point as naive iteration to stability.
pub fn reconstruct_by_dilation(marker: &Image, mask: &Image, conn: Connectivity) -> Result<Image> {
    if !marker.same_dims(mask) {
        return Err(Error::dimension("marker and mask must have equal dimensions".to_string()));
    }
    if !marker.is_finite() || !mask.is_finite() {
        return Err(Error::contract("reconstruction requires finite pixels".to_string()));
    }
    for (m, k) in marker.data().iter().zip(mask.data()) {
        if m > k {
            return Err(Error::contract("marker must be <= mask everywhere".to_string()));
        }
    }
    let (w, h) = (marker.width(), marker.height());
    let mut out = marker.clone();

    let (fwd, bwd): (Vec<(isize, isize)>, Vec<(isize, isize)>) = {
        let split = |pred: fn(isize, isize) -> bool| {
            conn.offsets()
                .iter()
                .copied()
                .filter(|&(dx, dy)| pred(dx, dy))
                .collect::<Vec<_>>()
        };
        (
            split(|dx, dy| dy < 0 || (dy == 0 && dx < 0)),
            split(|dx, dy| dy > 0 || (dy == 0 && dx > 0)),
        )
    };

    // Forward raster sweep.
    for y in 0..h {
        for x in 0..w {
            let mut v = out.get(x, y);
            for &(dx, dy) in &fwd {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                v = v.max(out.get(nx as usize, ny as usize));
            }
            out.set(x, y, v.min(mask.get(x, y)));
        }
    }
    // Backward sweep, queueing pixels that still have work to propagate.
    let mut queue = VecDeque::new();
    for y in (0..h).rev() {
        for x in (0..w).rev() {
            let mut v = out.get(x, y);
            for &(dx, dy) in &bwd {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                v = v.max(out.get(nx as usize, ny as usize));
            }
            let v = v.min(mask.get(x, y));
            out.set(x, y, v);
            for &(dx, dy) in &bwd {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let (nxu, nyu) = (nx as usize, ny as usize);
                if out.get(nxu, nyu) < v && out.get(nxu, nyu) < mask.get(nxu, nyu) {
                    queue.push_back(y * w + x);
                    break;
                }
            }
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = (i % w, i / w);
        let v = out.get(x, y);
        for &(dx, dy) in conn.offsets() {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                continue;
            }
            let (nxu, nyu) = (nx as usize, ny as usize);
            let cur = out.get(nxu, nyu);
            let cap = mask.get(nxu, nyu);
            if cur < v && cur < cap {
                out.set(nxu, nyu, v.min(cap));
                queue.push_back(nyu * w + nxu);
            }
        }
    }
    Ok(out)
}

/// Regional maxima with local contrast >= `h`: maxima of the reconstruction
/// of `img - h` under `img`.
pub fn h_maxima(img: &Image, h: f64, conn: Connectivity) -> Result<ExtremaMask> {
    if !(h > 0.0) {
        return Err(Error::parameter(format!("h must be > 0, got {h}")));
    }
    if !img.is_finite() {
        return Err(Error::contract("h_maxima requires finite pixels".to_string()));
    }
    let marker = img.map(|v| v - h);
    let reconstructed = reconstruct_by_dilation(&marker, img, conn)?;
    regional_maxima(&reconstructed, conn)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_is_one_plateau() {
        let img = Image::from_vec(4, 3, vec![0.5; 12]).unwrap();
        let m = regional_maxima(&img, Connectivity::Eight).unwrap();
        assert_eq!(m.count(), 12);
        assert_eq!(m.component_count(Connectivity::Eight), 1);
    }

    #[test]
    fn isolated_peak_only() {
        let mut img = Image::new(5, 5).unwrap();
        img.set(2, 2, 1.0);
        let m = regional_maxima(&img, Connectivity::Eight).unwrap();
        assert_eq!(m.count(), 1);
        assert!(m.get(2, 2));
    }

    #[test]
    fn reconstruction_fixed_point_and_shift() {
        let mask = Image::from_fn(6, 6, |x, y| ((x * 7 + y * 3) % 11) as f64 / 11.0).unwrap();
        let same = reconstruct_by_dilation(&mask, &mask, Connectivity::Eight).unwrap();
        assert_eq!(same, mask);

        let flat = Image::from_vec(4, 4, vec![0.8; 16]).unwrap();
        let marker = flat.map(|v| v - 0.3);
        let rec = reconstruct_by_dilation(&marker, &flat, Connectivity::Four).unwrap();
        for &v in rec.data() {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn marker_above_mask_is_rejected() {
        let mask = Image::new(3, 3).unwrap();
        let marker = Image::from_vec(3, 3, vec![0.1; 9]).unwrap();
        assert!(reconstruct_by_dilation(&marker, &mask, Connectivity::Eight).is_err());
    }

    #[test]
    fn h_maxima_keeps_contrasted_peak() {
        let mut img = Image::new(5, 5).unwrap();
        img.set(2, 2, 1.0);
        let m = h_maxima(&img, 0.05, Connectivity::Eight).unwrap();
        assert_eq!(m.count(), 1);
        assert!(m.get(2, 2));
    }

    #[test]
    fn h_maxima_suppresses_low_contrast_plateau() {
        // Plateau at 0.50 separated from the 0.53 ramp top by a dip of only
        // 0.02 < h: it merges with the top instead of counting on its own.
        let img = Image::from_vec(
            7,
            1,
            vec![0.40, 0.45, 0.50, 0.50, 0.48, 0.51, 0.53],
        )
        .unwrap();
        let plain = regional_maxima(&img, Connectivity::Eight).unwrap();
        assert_eq!(plain.component_count(Connectivity::Eight), 2);
        let m = h_maxima(&img, 0.05, Connectivity::Eight).unwrap();
        assert_eq!(m.component_count(Connectivity::Eight), 1);
        assert!(m.get(6, 0));
    }

    #[test]
    fn h_above_range_merges_everything() {
        // With h > max - min the reconstruction of img - h under img is the
        // constant max(img) - h, a single global plateau.
        let img = Image::from_fn(6, 6, |x, y| ((x * 5 + y * 13) % 9) as f64 / 9.0).unwrap();
        let (lo, hi) = img.min_max();
        let m = h_maxima(&img, (hi - lo) + 1.0, Connectivity::Eight).unwrap();
        assert_eq!(m.count(), 36);
        assert_eq!(m.component_count(Connectivity::Eight), 1);
    }

    #[test]
    fn h_must_be_positive() {
        let img = Image::new(3, 3).unwrap();
        assert!(h_maxima(&img, 0.0, Connectivity::Eight).is_err());
        assert!(h_maxima(&img, -1.0, Connectivity::Eight).is_err());
    }
}
