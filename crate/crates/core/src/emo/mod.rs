//! Multi-objective engines: NSGA-II, SPEA2 and MOEA/D.
//!
//! All objectives are minimised. Engines work on [`Individual`]s and call
//! into a [`SemanticHooks`] implementation at fixed points (crossover,
//! environmental selection, child evaluation); [`Canonical`] hooks leave
//! every engine in its textbook form.

mod moead;
mod nsga2;
mod spea2;

pub use moead::{replacement_targets, tchebycheff, Moead, MoeadParams, WeightVectorSet};
pub use nsga2::{nsga2_select, Nsga2, Survivors};
pub use spea2::{spea2_fitness, spea2_select, spea2_truncate, Spea2, Spea2Fitness};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gp::{self, GpError, ProgramTree};
use crate::metrics::{hypervolume_2d, size_stats, unique_solutions, GenerationStats, REFERENCE_POINT};
use crate::problem::{Individual, Problem};

#[derive(Debug, Error, PartialEq)]
pub enum EmoError {
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error("objective vector {index} has {found} entries, expected {expected}")]
    ObjectiveLength {
        index: usize,
        found: usize,
        expected: usize,
    },
    #[error("truncation target must be at least 1")]
    ZeroTarget,
    #[error("invalid parameter: {0}")]
    Param(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Nsga2,
    Spea2,
    Moead,
}

impl std::fmt::Display for EngineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EngineKind::Nsga2 => "nsga2",
            EngineKind::Spea2 => "spea2",
            EngineKind::Moead => "moead",
        })
    }
}

impl std::str::FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "nsga2" => Ok(EngineKind::Nsga2),
            "spea2" => Ok(EngineKind::Spea2),
            "moead" => Ok(EngineKind::Moead),
            other => Err(format!("unknown engine {other:?} (expected nsga2, spea2 or moead)")),
        }
    }
}

/// Which front diversity is counted over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UniqueBy {
    /// Distinct `(1 − TPR, 1 − TNR)` vectors.
    #[default]
    Objectives,
    /// Distinct semantics vectors.
    Semantics,
}

/// Tree-GP settings shared by all engines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpParams {
    pub pop_size: usize,
    /// Generations including the initial one.
    pub generations: usize,
    pub init_min_depth: usize,
    pub init_max_depth: usize,
    pub max_depth: usize,
    /// Depth bound of subtrees grown by mutation.
    pub mutation_depth: usize,
    pub crossover_rate: f64,
    /// Per-offspring mutation probability, applied after crossover.
    pub mutation_rate: f64,
}

impl Default for GpParams {
    fn default() -> Self {
        GpParams {
            pop_size: 100,
            generations: 30,
            init_min_depth: 2,
            init_max_depth: 6,
            max_depth: 17,
            mutation_depth: 4,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
        }
    }
}

impl GpParams {
    pub fn validate(&self) -> Result<(), EmoError> {
        let bad = |m: String| Err(EmoError::Param(m));
        if self.pop_size < 2 {
            return bad(format!("pop_size {} < 2", self.pop_size));
        }
        if self.generations < 1 {
            return bad("generations must be at least 1".into());
        }
        if self.init_min_depth < 1 || self.init_min_depth > self.init_max_depth {
            return bad(format!(
                "init depths [{}, {}] invalid",
                self.init_min_depth, self.init_max_depth
            ));
        }
        if self.init_max_depth > self.max_depth {
            return bad(format!(
                "init_max_depth {} exceeds max_depth {}",
                self.init_max_depth, self.max_depth
            ));
        }
        for (name, rate) in [("crossover_rate", self.crossover_rate), ("mutation_rate", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&rate) {
                return bad(format!("{name} {rate} not in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Everything an engine needs besides the problem and hooks.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineParams {
    pub gp: GpParams,
    /// SPEA2 archive capacity; `None` uses the population size.
    pub spea2_archive: Option<usize>,
    pub moead: MoeadParams,
    pub unique_by: UniqueBy,
}

/// Extension points used by the semantic approaches.
pub trait SemanticHooks {
    /// Length of the objective vectors the engine optimises.
    fn n_objectives(&self) -> usize {
        2
    }

    fn crossover<R: Rng + ?Sized>(
        &mut self,
        p1: &Individual,
        p2: &Individual,
        max_depth: usize,
        rng: &mut R,
    ) -> (ProgramTree, ProgramTree) {
        gp::subtree_crossover(&p1.tree, &p2.tree, rng, max_depth)
    }

    /// Called on the full candidate set before each environmental selection.
    /// May rewrite `objectives`; a returned vector replaces the engine's
    /// density estimate (larger values are preferred).
    fn prepare<R: Rng + ?Sized>(&mut self, _members: &mut [Individual], _rng: &mut R) -> Option<Vec<f64>> {
        None
    }

    /// Brings a freshly evaluated child in line with the last `prepare`
    /// call, returning its density surrogate if one is in use.
    fn annotate(&self, _child: &mut Individual) -> Option<f64> {
        None
    }
}

/// Hooks that leave the engines untouched.
#[derive(Debug, Clone, Copy, Default)]
pub struct Canonical;

impl SemanticHooks for Canonical {}

/// True iff `a` is no worse than `b` everywhere and better somewhere.
///
/// Panics if the vectors differ in length.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    assert_eq!(a.len(), b.len(), "objective vectors differ in length");
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Non-dominated fronts, best first; indices ascend within a front.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrontPartition {
    pub fronts: Vec<Vec<usize>>,
}

impl FrontPartition {
    pub fn first(&self) -> &[usize] {
        self.fronts.first().map_or(&[], Vec::as_slice)
    }

    /// Front number of every member.
    pub fn ranks(&self) -> Vec<usize> {
        let n = self.fronts.iter().map(Vec::len).sum();
        let mut rank = vec![0; n];
        for (r, front) in self.fronts.iter().enumerate() {
            for &i in front {
                rank[i] = r;
            }
        }
        rank
    }
}

fn check_lengths<V: AsRef<[f64]>>(objs: &[V]) -> Result<usize, EmoError> {
    let m = objs.first().map_or(0, |v| v.as_ref().len());
    for (index, v) in objs.iter().enumerate() {
        if v.as_ref().len() != m || m == 0 {
            return Err(EmoError::ObjectiveLength {
                index,
                found: v.as_ref().len(),
                expected: m.max(1),
            });
        }
    }
    Ok(m)
}

/// Deb's fast non-dominated sort.
pub fn fast_nondominated_sort<V: AsRef<[f64]>>(objs: &[V]) -> Result<FrontPartition, EmoError> {
    check_lengths(objs)?;
    let n = objs.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut dominator_count = vec![0usize; n];
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (objs[i].as_ref(), objs[j].as_ref());
            if dominates(a, b) {
                dominated_by_me[i].push(j);
                dominator_count[j] += 1;
            } else if dominates(b, a) {
                dominated_by_me[j].push(i);
                dominator_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominator_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by_me[p] {
                dominator_count[q] -= 1;
                if dominator_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    Ok(FrontPartition { fronts })
}

/// NSGA-II crowding distance within one front.
///
/// For each objective the first and last members of the sorted order get
/// `+∞`; interior members accumulate `(next − prev) / (max − min)`, and an
/// objective with zero range contributes nothing to them.
pub fn crowding_distance<V: AsRef<[f64]>>(front: &[V]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0; n];
    if n == 0 {
        return dist;
    }
    let m = front[0].as_ref().len();
    let mut order: Vec<usize> = (0..n).collect();
    for k in 0..m {
        let value = |i: usize| front[i].as_ref()[k];
        order.sort_by(|&a, &b| value(a).total_cmp(&value(b)).then(a.cmp(&b)));
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = value(order[n - 1]) - value(order[0]);
        if range > 0.0 {
            for w in 1..n.saturating_sub(1) {
                dist[order[w]] += (value(order[w + 1]) - value(order[w - 1])) / range;
            }
        }
    }
    dist
}

/// Produces two offspring trees: crossover with the configured rate through
/// `hooks`, then independent mutation of each child.
pub(crate) fn breed<H: SemanticHooks, R: Rng + ?Sized>(
    p1: &Individual,
    p2: &Individual,
    problem: &Problem,
    gp: &GpParams,
    hooks: &mut H,
    rng: &mut R,
) -> [ProgramTree; 2] {
    let (a, b) = if rng.random_bool(gp.crossover_rate) {
        hooks.crossover(p1, p2, gp.max_depth, rng)
    } else {
        (p1.tree.clone(), p2.tree.clone())
    };
    [a, b].map(|child| {
        if rng.random_bool(gp.mutation_rate) {
            gp::subtree_mutation(&child, problem.primitives(), rng, gp.max_depth, gp.mutation_depth)
        } else {
            child
        }
    })
}

pub(crate) fn initial_population<R: Rng + ?Sized>(
    problem: &Problem,
    gp: &GpParams,
    size: usize,
    rng: &mut R,
) -> Result<Vec<Individual>, EmoError> {
    gp.validate()?;
    let trees = gp::ramped_half_and_half(
        size,
        gp.init_min_depth,
        gp.init_max_depth,
        problem.primitives(),
        rng,
    )?;
    Ok(problem.evaluate_all(trees))
}

/// A generational engine the driver can step and observe.
pub trait Engine {
    fn step<R: Rng + ?Sized>(&mut self, rng: &mut R);

    /// Current population (NSGA-II, MOEA/D) or archive (SPEA2).
    fn members(&self) -> &[Individual];

    /// Candidates for the reported front.
    fn front_candidates(&self) -> &[Individual] {
        self.members()
    }
}

/// Members of `candidates` that are non-dominated on the base objectives.
pub fn reported_front(candidates: &[Individual]) -> Vec<Individual> {
    let base: Vec<&[f64]> = candidates.iter().map(|m| &m.base[..]).collect();
    fast_nondominated_sort(&base)
        .expect("base objectives share one length")
        .first()
        .iter()
        .map(|&i| candidates[i].clone())
        .collect()
}

pub fn generation_stats<E: Engine>(generation: usize, engine: &E, unique_by: UniqueBy) -> GenerationStats {
    let front = reported_front(engine.front_candidates());
    let points: Vec<[f64; 2]> = front.iter().map(|m| [m.base[0], m.base[1]]).collect();
    let unique_count = match unique_by {
        UniqueBy::Objectives => unique_solutions(&points),
        UniqueBy::Semantics => {
            let sems: Vec<&[f64]> = front.iter().map(|m| &m.semantics[..]).collect();
            unique_solutions(&sems)
        }
    };
    let nodes: Vec<usize> = engine.members().iter().map(Individual::node_count).collect();
    GenerationStats {
        generation,
        hypervolume: hypervolume_2d(&points, REFERENCE_POINT),
        unique_count,
        mean_nodes: size_stats(&nodes).map_or(0.0, |s| s.mean),
        front_size: front.len(),
    }
}

/// Final front plus per-generation statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineRun {
    pub front: Vec<Individual>,
    pub stats: Vec<GenerationStats>,
}

/// Steps `engine` until `generations` generations (the initial one included)
/// have been recorded, observing each through `observe`.
pub fn drive<E: Engine, R: Rng + ?Sized>(
    mut engine: E,
    generations: usize,
    unique_by: UniqueBy,
    rng: &mut R,
    mut observe: impl FnMut(usize, &E),
) -> EngineRun {
    let mut stats = Vec::with_capacity(generations);
    for g in 0..generations {
        if g > 0 {
            engine.step(rng);
        }
        observe(g, &engine);
        stats.push(generation_stats(g, &engine, unique_by));
    }
    EngineRun {
        front: reported_front(engine.front_candidates()),
        stats,
    }
}

/// Builds the requested engine and runs it to completion.
pub fn run_engine<H: SemanticHooks, R: Rng + ?Sized>(
    kind: EngineKind,
    problem: &Problem,
    params: &EngineParams,
    hooks: H,
    rng: &mut R,
) -> Result<EngineRun, EmoError> {
    let g = params.gp.generations;
    let u = params.unique_by;
    Ok(match kind {
        EngineKind::Nsga2 => drive(Nsga2::new(problem, &params.gp, hooks, rng)?, g, u, rng, |_, _| {}),
        EngineKind::Spea2 => {
            let archive = params.spea2_archive.unwrap_or(params.gp.pop_size);
            drive(Spea2::new(problem, &params.gp, archive, hooks, rng)?, g, u, rng, |_, _| {})
        }
        EngineKind::Moead => drive(
            Moead::new(problem, &params.gp, &params.moead, hooks, rng)?,
            g,
            u,
            rng,
            |_, _| {},
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominance() {
        assert!(dominates(&[0.2, 0.3], &[0.4, 0.3]));
        assert!(!dominates(&[0.2, 0.3], &[0.2, 0.3]));
        assert!(!dominates(&[0.1, 0.9], &[0.9, 0.1]));
        assert!(!dominates(&[0.9, 0.1], &[0.1, 0.9]));
    }

    #[test]
    #[should_panic(expected = "differ in length")]
    fn dominance_length_mismatch_panics() {
        dominates(&[0.1], &[0.1, 0.2]);
    }

    #[test]
    fn sort_single_front_and_chain() {
        let flat = [[0.1, 0.9], [0.5, 0.5], [0.9, 0.1]];
        assert_eq!(fast_nondominated_sort(&flat).unwrap().fronts, vec![vec![0, 1, 2]]);
        let chain = [[0.3, 0.3], [0.1, 0.1], [0.2, 0.2]];
        let p = fast_nondominated_sort(&chain).unwrap();
        assert_eq!(p.fronts, vec![vec![1], vec![2], vec![0]]);
        assert_eq!(p.ranks(), vec![2, 0, 1]);
    }

    #[test]
    fn sort_rejects_ragged_objectives() {
        let ragged: Vec<Vec<f64>> = vec![vec![0.1, 0.2], vec![0.3]];
        assert_eq!(
            fast_nondominated_sort(&ragged),
            Err(EmoError::ObjectiveLength { index: 1, found: 1, expected: 2 })
        );
    }

    #[test]
    fn crowding_examples() {
        let inf = f64::INFINITY;
        assert_eq!(crowding_distance(&[[0.0, 1.0], [0.5, 0.5], [1.0, 0.0]]), vec![inf, 2.0, inf]);
        assert_eq!(crowding_distance(&[[0.0, 1.0], [1.0, 0.0]]), vec![inf, inf]);
        assert_eq!(crowding_distance(&[[0.3, 0.3]]), vec![inf]);
        assert_eq!(crowding_distance(&[[0.5, 0.5]; 4]), vec![inf, 0.0, 0.0, inf]);
    }

    #[test]
    fn crowding_order_survives_affine_rescaling() {
        let front = [[0.0, 1.0], [0.1, 0.7], [0.4, 0.5], [0.5, 0.2], [0.9, 0.1], [1.0, 0.0]];
        let scaled: Vec<[f64; 2]> = front.iter().map(|p| [3.0 * p[0] + 7.0, p[1]]).collect();
        let a = crowding_distance(&front);
        let b = crowding_distance(&scaled);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12 || (x.is_infinite() && y.is_infinite()));
        }
    }

    #[test]
    fn gp_params_validation() {
        assert!(GpParams::default().validate().is_ok());
        let bad = GpParams { crossover_rate: 1.5, ..GpParams::default() };
        assert!(bad.validate().is_err());
        let bad = GpParams { init_max_depth: 20, ..GpParams::default() };
        assert!(bad.validate().is_err());
    }
}
