//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semogp::dataset::parse_csv;
use semogp::gp::PrimitiveSet;
use semogp::harness::gen_synth;
use semogp::{Dataset, Problem};

pub fn weakly_better_everywhere(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

pub fn dominated_by(b: &[f64], a: &[f64]) -> bool {
    weakly_better_everywhere(a, b) && a != b
}

/// Fronts by repeated peeling: each layer is every remaining point that no
/// remaining point dominates. O(n³).
pub fn peel_fronts(points: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let mut remaining: Vec<usize> = (0..points.len()).collect();
    let mut fronts = Vec::new();
    while !remaining.is_empty() {
        let layer: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| !remaining.iter().any(|&j| dominated_by(&points[i], &points[j])))
            .collect();
        remaining.retain(|i| !layer.contains(i));
        fronts.push(layer);
    }
    fronts
}

pub struct BruteSpea2 {
    pub strength: Vec<f64>,
    pub raw: Vec<f64>,
    pub density: Vec<f64>,
}

pub fn brute_spea2(points: &[Vec<f64>]) -> BruteSpea2 {
    let n = points.len();
    let strength: Vec<f64> = (0..n)
        .map(|i| (0..n).filter(|&j| dominated_by(&points[j], &points[i])).count() as f64)
        .collect();
    let raw = (0..n)
        .map(|i| (0..n).filter(|&j| dominated_by(&points[i], &points[j])).map(|j| strength[j]).sum())
        .collect();
    let k = (n as f64).sqrt() as usize;
    let density = (0..n)
        .map(|i| {
            let mut d: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let s: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b).powi(2)).sum();
                    s.sqrt()
                })
                .collect();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let sigma = if d.is_empty() { 0.0 } else { d[k.max(1).min(d.len()) - 1] };
            1.0 / (sigma + 2.0)
        })
        .collect();
    BruteSpea2 { strength, raw, density }
}

/// Monte Carlo estimate of the area dominated by `front` inside `[0, r]²`.
pub fn mc_hypervolume(front: &[[f64; 2]], r: [f64; 2], samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..samples {
        let x = rng.random_range(0.0..r[0]);
        let y = rng.random_range(0.0..r[1]);
        if front.iter().any(|p| p[0] <= x && p[1] <= y) {
            hits += 1;
        }
    }
    r[0] * r[1] * hits as f64 / samples as f64
}

pub fn random_points(rng: &mut impl Rng, n: usize, m: usize, grid: Option<u32>) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..m)
                .map(|_| match grid {
                    Some(g) => rng.random_range(0..=g) as f64 / g as f64,
                    None => rng.random::<f64>(),
                })
                .collect()
        })
        .collect()
}

pub fn synthetic(n: usize, seed: u64) -> Dataset {
    parse_csv(&gen_synth(n, 9.0, seed).unwrap(), None, Some("pos")).unwrap()
}

pub fn synthetic_problem(n: usize, seed: u64) -> Problem {
    let ds = synthetic(n, seed);
    Problem::new(&ds, PrimitiveSet::arithmetic(ds.n_features()).unwrap())
}
