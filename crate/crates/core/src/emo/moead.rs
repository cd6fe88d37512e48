use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{breed, dominates, initial_population, Engine, EmoError, GpParams, SemanticHooks};
use crate::problem::{Individual, Problem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoeadParams {
    /// Neighbourhood size T, capped at the number of weight vectors.
    pub neighborhood_size: usize,
    /// Maximum number of solutions one child may replace.
    pub max_replacements: usize,
    /// Probability of mating (and replacing) within the neighbourhood
    /// rather than the whole population.
    pub neighbor_mating_prob: f64,
}

impl Default for MoeadParams {
    fn default() -> Self {
        MoeadParams {
            neighborhood_size: 20,
            max_replacements: 2,
            neighbor_mating_prob: 0.9,
        }
    }
}

/// Uniform simplex-lattice weight vectors with Euclidean neighbourhoods.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVectorSet {
    pub vectors: Vec<Vec<f64>>,
    /// Indices of the T nearest vectors (self first), nearest first.
    pub neighbors: Vec<Vec<usize>>,
}

fn compositions(parts: usize, total: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(parts - 1, total - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn lattice_size(m: usize, h: usize) -> usize {
    // C(h + m − 1, m − 1)
    (1..m).fold(1usize, |acc, i| acc * (h + i) / i)
}

impl WeightVectorSet {
    /// All vectors `(k_1/h, …, k_m/h)` with non-negative integers summing to `h`.
    pub fn simplex_lattice(m: usize, h: usize, neighborhood: usize) -> Result<Self, EmoError> {
        if m < 2 || h < 1 {
            return Err(EmoError::Param(format!("simplex lattice needs m ≥ 2 and H ≥ 1 (m={m}, H={h})")));
        }
        if neighborhood == 0 {
            return Err(EmoError::Param("neighbourhood size must be at least 1".into()));
        }
        let vectors: Vec<Vec<f64>> = compositions(m, h)
            .into_iter()
            .map(|c| c.into_iter().map(|k| k as f64 / h as f64).collect())
            .collect();
        let t = neighborhood.min(vectors.len());
        let neighbors = vectors
            .iter()
            .map(|w| {
                let mut by_distance: Vec<(f64, usize)> = vectors
                    .iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let d2: f64 = w.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
                        (d2, j)
                    })
                    .collect();
                by_distance.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                by_distance.into_iter().take(t).map(|(_, j)| j).collect()
            })
            .collect();
        Ok(WeightVectorSet { vectors, neighbors })
    }

    /// The smallest lattice with at least `min_count` vectors.
    pub fn for_population(m: usize, min_count: usize, neighborhood: usize) -> Result<Self, EmoError> {
        let mut h = 1;
        while lattice_size(m, h) < min_count {
            h += 1;
        }
        Self::simplex_lattice(m, h, neighborhood)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Weighted Chebyshev distance to the ideal point: `max_i w_i · |f_i − z_i|`.
///
/// Panics if the lengths differ.
pub fn tchebycheff(f: &[f64], w: &[f64], z: &[f64]) -> f64 {
    assert!(f.len() == w.len() && w.len() == z.len(), "tchebycheff: length mismatch");
    f.iter()
        .zip(w)
        .zip(z)
        .map(|((fi, wi), zi)| wi * (fi - zi).abs())
        .fold(0.0, f64::max)
}

/// Subproblems (visited in `order`) whose current solution the child
/// strictly improves on, at most `max_replacements` of them. With a
/// surrogate `(child, current)`, equal aggregation values are broken in
/// favour of the larger surrogate.
pub fn replacement_targets<V: AsRef<[f64]>>(
    order: &[usize],
    weights: &WeightVectorSet,
    ideal: &[f64],
    child: &[f64],
    current: &[V],
    max_replacements: usize,
    surrogate: Option<(f64, &[f64])>,
) -> Vec<usize> {
    let mut out = Vec::new();
    for &j in order {
        if out.len() >= max_replacements {
            break;
        }
        let w = &weights.vectors[j];
        let g_child = tchebycheff(child, w, ideal);
        let g_current = tchebycheff(current[j].as_ref(), w, ideal);
        let wins_tie = surrogate.is_some_and(|(c, s)| g_child == g_current && c > s[j]);
        if g_child < g_current || wins_tie {
            out.push(j);
        }
    }
    out
}

/// MOEA/D with Tchebycheff decomposition and an external non-dominated archive.
pub struct Moead<'p, H> {
    problem: &'p Problem,
    gp: GpParams,
    params: MoeadParams,
    hooks: H,
    weights: WeightVectorSet,
    population: Vec<Individual>,
    surrogate: Option<Vec<f64>>,
    ideal: Vec<f64>,
    archive: Vec<Individual>,
}

impl<'p, H: SemanticHooks> Moead<'p, H> {
    /// One subproblem per weight vector; the lattice is the smallest with at
    /// least `gp.pop_size` vectors.
    pub fn new<R: Rng + ?Sized>(
        problem: &'p Problem,
        gp: &GpParams,
        params: &MoeadParams,
        hooks: H,
        rng: &mut R,
    ) -> Result<Self, EmoError> {
        if !(0.0..=1.0).contains(&params.neighbor_mating_prob) {
            return Err(EmoError::Param(format!(
                "neighbor_mating_prob {} not in [0, 1]",
                params.neighbor_mating_prob
            )));
        }
        gp.validate()?;
        let weights = WeightVectorSet::for_population(hooks.n_objectives(), gp.pop_size, params.neighborhood_size)?;
        let population = initial_population(problem, gp, weights.len(), rng)?;
        let mut engine = Moead {
            problem,
            gp: gp.clone(),
            params: params.clone(),
            hooks,
            weights,
            population,
            surrogate: None,
            ideal: Vec::new(),
            archive: Vec::new(),
        };
        engine.refresh(rng);
        let initial = engine.population.clone();
        for ind in &initial {
            engine.archive_insert(ind);
        }
        Ok(engine)
    }

    pub fn ideal(&self) -> &[f64] {
        &self.ideal
    }

    pub fn weights(&self) -> &WeightVectorSet {
        &self.weights
    }

    pub fn archive(&self) -> &[Individual] {
        &self.archive
    }

    fn refresh<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.surrogate = self.hooks.prepare(&mut self.population, rng);
        let population = std::mem::take(&mut self.population);
        for ind in &population {
            self.update_ideal(&ind.objectives);
        }
        self.population = population;
    }

    fn update_ideal(&mut self, f: &[f64]) {
        if self.ideal.is_empty() {
            self.ideal = f.to_vec();
        } else {
            for (z, v) in self.ideal.iter_mut().zip(f) {
                *z = z.min(*v);
            }
        }
    }

    fn archive_insert(&mut self, child: &Individual) {
        let b = &child.base[..];
        if self.archive.iter().any(|a| a.base[..] == *b || dominates(&a.base, b)) {
            return;
        }
        self.archive.retain(|a| !dominates(b, &a.base));
        self.archive.push(child.clone());
    }
}

impl<H: SemanticHooks> Engine for Moead<'_, H> {
    fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.refresh(rng);
        let n = self.population.len();
        for i in 0..n {
            let mut pool: Vec<usize> = if rng.random_bool(self.params.neighbor_mating_prob) {
                self.weights.neighbors[i].clone()
            } else {
                (0..n).collect()
            };
            let a = pool[rng.random_range(0..pool.len())];
            let b = if pool.len() > 1 {
                loop {
                    let b = pool[rng.random_range(0..pool.len())];
                    if b != a {
                        break b;
                    }
                }
            } else {
                a
            };
            let [tree, _] = breed(
                &self.population[a],
                &self.population[b],
                self.problem,
                &self.gp,
                &mut self.hooks,
                rng,
            );
            let mut child = self.problem.evaluate(tree);
            let child_surrogate = self.hooks.annotate(&mut child);
            self.update_ideal(&child.objectives);
            self.archive_insert(&child);

            pool.shuffle(rng);
            let objs: Vec<&[f64]> = self.population.iter().map(|m| &m.objectives[..]).collect();
            let tie = child_surrogate.zip(self.surrogate.as_deref());
            let targets = replacement_targets(
                &pool,
                &self.weights,
                &self.ideal,
                &child.objectives,
                &objs,
                self.params.max_replacements,
                tie,
            );
            for j in targets {
                self.population[j] = child.clone();
                if let (Some(s), Some(c)) = (self.surrogate.as_mut(), child_surrogate) {
                    s[j] = c;
                }
            }
        }
    }

    fn members(&self) -> &[Individual] {
        &self.population
    }

    fn front_candidates(&self) -> &[Individual] {
        &self.archive
    }
}
