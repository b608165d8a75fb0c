//! Marker-based watershed by priority flooding.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::morphology::Connectivity;
use crate::segment::{LabelMap, MarkerSet};

struct Entry {
    value: f64,
    seq: u64,
    idx: usize,
    label: u32,
}

// Min-heap ordering on (relief value, insertion sequence).
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .value
            .total_cmp(&self.value)
            .then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.value.total_cmp(&other.value) == Ordering::Equal && self.seq == other.seq
    }
}

impl Eq for Entry {}

/// Flood the relief from the markers: pixels are popped from a min-priority
/// queue keyed by (relief value, insertion sequence) and claim their
/// unlabeled neighbors. Ties break by insertion order, making the result
/// deterministic. Every pixel (reachable under `conn`) ends up labeled.
pub fn watershed(relief: &Image, markers: &MarkerSet, conn: Connectivity) -> Result<LabelMap> {
    flood(relief, markers, conn, None)
}

/// Watershed restricted to `allowed` pixels (None = whole image).
pub(crate) fn flood(
    relief: &Image,
    markers: &MarkerSet,
    conn: Connectivity,
    allowed: Option<&[bool]>,
) -> Result<LabelMap> {
    if relief.data().iter().any(|v| v.is_nan()) {
        return Err(Error::contract("watershed relief must not contain NaN".to_string()));
    }
    markers.check_bounds(relief.width(), relief.height())?;
    let (w, h) = (relief.width(), relief.height());
    if let Some(mask) = allowed {
        if mask.len() != w * h {
            return Err(Error::dimension("allowed mask does not match relief".to_string()));
        }
    }
    let mut labels = LabelMap::new(w, h)?;
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    for &(x, y, label) in markers.markers() {
        let idx = y * w + x;
        if let Some(mask) = allowed {
            if !mask[idx] {
                return Err(Error::contract(format!(
                    "marker ({x}, {y}) lies outside the floodable region"
                )));
            }
        }
        let existing = labels.get(x, y);
        if existing != 0 && existing != label {
            return Err(Error::contract(format!(
                "conflicting marker labels at ({x}, {y})"
            )));
        }
        if existing == 0 {
            labels.set(x, y, label);
            heap.push(Entry { value: relief.get(x, y), seq, idx, label });
            seq += 1;
        }
    }
    while let Some(Entry { idx, label, .. }) = heap.pop() {
        let (x, y) = (idx % w, idx / w);
        for &(dx, dy) in conn.offsets() {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                continue;
            }
            let (nxu, nyu) = (nx as usize, ny as usize);
            let nidx = nyu * w + nxu;
            if let Some(mask) = allowed {
                if !mask[nidx] {
                    continue;
                }
            }
            if labels.get(nxu, nyu) == 0 {
                labels.set(nxu, nyu, label);
                heap.push(Entry { value: relief.get(nxu, nyu), seq, idx: nidx, label });
                seq += 1;
            }
        }
    }
    Ok(labels)
}
