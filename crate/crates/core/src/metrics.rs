//! Front quality, diversity and program-size measures.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reference point in `(1 − TPR, 1 − TNR)` space. The small offset past 1
/// gives extreme classifiers a non-zero contribution.
pub const REFERENCE_POINT: [f64; 2] = [1.01, 1.01];

#[derive(Debug, Error, PartialEq)]
#[error("size statistics need a non-empty population")]
pub struct EmptyPopulation;

/// Per-generation summary of the current front.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub hypervolume: f64,
    pub unique_count: usize,
    pub mean_nodes: f64,
    pub front_size: usize,
}

/// Exact hypervolume of a 2-objective minimisation front.
///
/// Points with a coordinate beyond `reference` are discarded, dominated
/// points are skipped, and the remaining staircase (ascending `f1`,
/// descending `f2`) is summed in horizontal slabs as
/// `Σ (ref1 − f1[i]) · (f2[i−1] − f2[i])` with `f2[0] = ref2`, which is the
/// same area as the vertical-slab sum `Σ (f1[i+1] − f1[i]) · (ref2 − f2[i])`.
pub fn hypervolume_2d(front: &[[f64; 2]], reference: [f64; 2]) -> f64 {
    let mut pts: Vec<[f64; 2]> = front
        .iter()
        .copied()
        .filter(|p| p[0] <= reference[0] && p[1] <= reference[1])
        .collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));

    let mut staircase: Vec<[f64; 2]> = Vec::with_capacity(pts.len());
    for p in pts {
        match staircase.last() {
            Some(last) if p[1] >= last[1] => {}
            _ => staircase.push(p),
        }
    }

    let mut volume = 0.0;
    let mut upper_f2 = reference[1];
    for p in &staircase {
        volume += (reference[0] - p[0]) * (upper_f2 - p[1]);
        upper_f2 = p[1];
    }
    volume
}

/// Number of distinct objective vectors (exact equality).
pub fn unique_solutions<V: AsRef<[f64]>>(front: &[V]) -> usize {
    front
        .iter()
        .map(|v| v.as_ref().iter().map(|x| x.to_bits()).collect::<Vec<u64>>())
        .collect::<HashSet<_>>()
        .len()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeStats {
    pub mean: f64,
    pub median: f64,
    pub max: usize,
}

/// Mean, median and maximum of a set of node counts.
pub fn size_stats(node_counts: &[usize]) -> Result<SizeStats, EmptyPopulation> {
    if node_counts.is_empty() {
        return Err(EmptyPopulation);
    }
    let mut sorted = node_counts.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let mean = sorted.iter().sum::<usize>() as f64 / n as f64;
    let median = if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    };
    Ok(SizeStats {
        mean,
        median,
        max: sorted[n - 1],
    })
}

/// Median of a non-empty sample.
pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}
