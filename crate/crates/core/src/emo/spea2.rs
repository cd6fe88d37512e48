use rand::Rng;

use super::{breed, dominates, initial_population, Engine, EmoError, GpParams, SemanticHooks};
use crate::problem::{Individual, Problem};

/// SPEA2 fitness components for every member of `population ∪ archive`
/// (population first).
#[derive(Debug, Clone, PartialEq)]
pub struct Spea2Fitness {
    /// Number of members each member dominates.
    pub strength: Vec<usize>,
    /// Sum of the strengths of each member's dominators.
    pub raw: Vec<f64>,
    /// `1 / (σ_k + 2)` with σ_k the distance to the k-th nearest neighbour.
    pub density: Vec<f64>,
    pub fitness: Vec<f64>,
    pub k: usize,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn fitness_of<V: AsRef<[f64]>>(objs: &[V], density_override: Option<&[f64]>) -> Spea2Fitness {
    let n = objs.len();
    let mut strength = vec![0usize; n];
    let mut dominators: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if i != j && dominates(objs[i].as_ref(), objs[j].as_ref()) {
                strength[i] += 1;
                dominators[j].push(i);
            }
        }
    }
    let raw: Vec<f64> = dominators
        .iter()
        .map(|ds| ds.iter().map(|&d| strength[d] as f64).sum())
        .collect();

    let k = ((n as f64).sqrt().floor() as usize).max(1);
    let density: Vec<f64> = match density_override {
        Some(s) => s.iter().map(|&v| 1.0 / (v + 2.0)).collect(),
        None => (0..n)
            .map(|i| {
                let mut d: Vec<f64> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| euclidean(objs[i].as_ref(), objs[j].as_ref()))
                    .collect();
                d.sort_by(f64::total_cmp);
                let sigma = if d.is_empty() { 0.0 } else { d[(k - 1).min(d.len() - 1)] };
                1.0 / (sigma + 2.0)
            })
            .collect(),
    };
    let fitness = raw.iter().zip(&density).map(|(r, d)| r + d).collect();
    Spea2Fitness {
        strength,
        raw,
        density,
        fitness,
        k,
    }
}

/// Strength, raw fitness and k-th nearest neighbour density over the union
/// of `population` and `archive`, with `k = ⌊√(N + N̄)⌋`.
pub fn spea2_fitness<V: AsRef<[f64]>>(population: &[V], archive: &[V]) -> Spea2Fitness {
    let union: Vec<&[f64]> = population
        .iter()
        .chain(archive)
        .map(|v| v.as_ref())
        .collect();
    fitness_of(&union, None)
}

/// SPEA2 archive truncation: repeatedly drops the member whose sorted
/// distances to the remaining members are lexicographically smallest
/// (lowest index on ties). Returns the kept indices in ascending order.
pub fn spea2_truncate<V: AsRef<[f64]>>(archive: &[V], target: usize) -> Result<Vec<usize>, EmoError> {
    if target == 0 {
        return Err(EmoError::ZeroTarget);
    }
    let n = archive.len();
    let dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| euclidean(archive[i].as_ref(), archive[j].as_ref())).collect())
        .collect();
    let mut alive: Vec<usize> = (0..n).collect();
    while alive.len() > target {
        let neighbour_lists: Vec<Vec<f64>> = alive
            .iter()
            .map(|&i| {
                let mut d: Vec<f64> = alive.iter().filter(|&&j| j != i).map(|&j| dist[i][j]).collect();
                d.sort_by(f64::total_cmp);
                d
            })
            .collect();
        let mut victim = 0;
        for pos in 1..alive.len() {
            let cmp = neighbour_lists[pos]
                .iter()
                .zip(&neighbour_lists[victim])
                .map(|(a, b)| a.total_cmp(b))
                .find(|o| o.is_ne());
            if cmp == Some(std::cmp::Ordering::Less) {
                victim = pos;
            }
        }
        alive.remove(victim);
    }
    Ok(alive)
}

/// SPEA2 environmental selection of `target` members out of `objs`.
///
/// Returns the kept indices (ascending) and the fitness of every candidate.
/// With `density_override`, density becomes `1 / (s + 2)` of the surrogate
/// `s` and an oversized non-dominated set is cut by descending surrogate
/// instead of nearest-neighbour truncation.
pub fn spea2_select<V: AsRef<[f64]>>(
    objs: &[V],
    target: usize,
    density_override: Option<&[f64]>,
) -> Result<(Vec<usize>, Spea2Fitness), EmoError> {
    if target == 0 {
        return Err(EmoError::ZeroTarget);
    }
    super::check_lengths(objs)?;
    let fit = fitness_of(objs, density_override);
    let nondominated: Vec<usize> = (0..objs.len()).filter(|&i| fit.raw[i] == 0.0).collect();
    let mut kept = if nondominated.len() > target {
        match density_override {
            Some(s) => {
                let mut order = nondominated.clone();
                order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
                order.truncate(target);
                order
            }
            None => {
                let members: Vec<&[f64]> = nondominated.iter().map(|&i| objs[i].as_ref()).collect();
                spea2_truncate(&members, target)?
                    .into_iter()
                    .map(|k| nondominated[k])
                    .collect()
            }
        }
    } else {
        let mut kept = nondominated;
        let mut rest: Vec<usize> = (0..objs.len()).filter(|&i| fit.raw[i] > 0.0).collect();
        rest.sort_by(|&a, &b| fit.fitness[a].total_cmp(&fit.fitness[b]).then(a.cmp(&b)));
        kept.extend(rest.into_iter().take(target - kept.len()));
        kept
    };
    kept.sort_unstable();
    Ok((kept, fit))
}

/// SPEA2 over GP individuals. The archive is the engine's elite set.
pub struct Spea2<'p, H> {
    problem: &'p Problem,
    gp: GpParams,
    archive_size: usize,
    hooks: H,
    archive: Vec<Individual>,
    archive_fitness: Vec<f64>,
}

impl<'p, H: SemanticHooks> Spea2<'p, H> {
    pub fn new<R: Rng + ?Sized>(
        problem: &'p Problem,
        gp: &GpParams,
        archive_size: usize,
        hooks: H,
        rng: &mut R,
    ) -> Result<Self, EmoError> {
        if archive_size == 0 {
            return Err(EmoError::ZeroTarget);
        }
        let initial = initial_population(problem, gp, gp.pop_size, rng)?;
        let mut engine = Spea2 {
            problem,
            gp: gp.clone(),
            archive_size,
            hooks,
            archive: Vec::new(),
            archive_fitness: Vec::new(),
        };
        engine.select(initial, rng);
        Ok(engine)
    }

    pub fn archive(&self) -> &[Individual] {
        &self.archive
    }

    fn select<R: Rng + ?Sized>(&mut self, mut union: Vec<Individual>, rng: &mut R) {
        let surrogate = self.hooks.prepare(&mut union, rng);
        let objs: Vec<&[f64]> = union.iter().map(|m| &m.objectives[..]).collect();
        let target = self.archive_size.min(union.len());
        let (kept, fit) = spea2_select(&objs, target, surrogate.as_deref())
            .expect("engine objective vectors share one length");
        self.archive_fitness = kept.iter().map(|&i| fit.fitness[i]).collect();
        let mut slots: Vec<Option<Individual>> = union.into_iter().map(Some).collect();
        self.archive = kept.iter().map(|&i| slots[i].take().expect("kept once")).collect();
    }

    fn tournament<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let n = self.archive.len();
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if self.archive_fitness[b] < self.archive_fitness[a] {
            b
        } else {
            a
        }
    }
}

impl<H: SemanticHooks> Engine for Spea2<'_, H> {
    fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let n = self.gp.pop_size;
        let mut trees = Vec::with_capacity(n + 1);
        while trees.len() < n {
            let p1 = self.tournament(rng);
            let p2 = self.tournament(rng);
            let children = breed(
                &self.archive[p1],
                &self.archive[p2],
                self.problem,
                &self.gp,
                &mut self.hooks,
                rng,
            );
            trees.extend(children);
        }
        trees.truncate(n);
        let mut union = self.problem.evaluate_all(trees);
        union.append(&mut self.archive);
        self.select(union, rng);
    }

    fn members(&self) -> &[Individual] {
        &self.archive
    }
}
