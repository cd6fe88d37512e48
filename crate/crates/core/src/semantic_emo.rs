//! Semantic approaches plugged into the engines.
//!
//! * **SSC** (semantic similarity-based crossover) retries subtree crossover
//!   until the exchanged subtrees' mean semantic difference lies within
//!   `[lbss, ubss]`, falling back to the last attempt.
//! * **SCD** (semantic crowding distance) picks a pivot from the sparsest
//!   part of the first front and uses each candidate's distance count to the
//!   pivot in place of the crowding/density estimate.
//! * **SDO** (semantic distance as an additional objective) appends the
//!   normalised, negated distance count to the pivot as a third objective.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::emo::{self, crowding_distance, fast_nondominated_sort, EmoError, EngineKind, EngineParams, EngineRun, SemanticHooks};
use crate::gp::{self, Inputs, ProgramTree, SemanticsVector};
use crate::problem::{Individual, Problem};
use crate::semantics::{rule_distance, select_pivot, ssc_distance, DistanceRule, Pivot, SimilarityBounds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Approach {
    Canonical,
    Ssc,
    Scd,
    Sdo,
}

impl std::fmt::Display for Approach {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Approach::Canonical => "canonical",
            Approach::Ssc => "ssc",
            Approach::Scd => "scd",
            Approach::Sdo => "sdo",
        })
    }
}

impl std::str::FromStr for Approach {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "canonical" => Ok(Approach::Canonical),
            "ssc" => Ok(Approach::Ssc),
            "scd" => Ok(Approach::Scd),
            "sdo" => Ok(Approach::Sdo),
            other => Err(format!("unknown approach {other:?} (expected canonical, ssc, scd or sdo)")),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum VariantError {
    #[error("scd is not defined for moead; set allow_scd_moead to run it as a tie-breaker")]
    ScdWithMoead,
    #[error("ssc_max_trials must be at least 1")]
    Trials,
    #[error("ssc_subset_fraction {0} not in (0, 1]")]
    SubsetFraction(f64),
    #[error(transparent)]
    Engine(#[from] EmoError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemanticConfig {
    pub approach: Approach,
    pub bounds: SimilarityBounds,
    pub distance_rule: DistanceRule,
    pub ssc_max_trials: usize,
    /// Fraction of fitness cases sampled for each SSC distance; 1.0 uses all.
    pub ssc_subset_fraction: f64,
    /// Measure SSC similarity between whole parents instead of the
    /// exchanged subtrees.
    pub ssc_whole_parent: bool,
    /// Permit SCD under MOEA/D, where the surrogate only breaks ties in
    /// neighbour replacement.
    pub allow_scd_moead: bool,
}

impl Default for SemanticConfig {
    fn default() -> Self {
        SemanticConfig {
            approach: Approach::Canonical,
            bounds: SimilarityBounds::new(0.01, 0.5).expect("valid default bounds"),
            distance_rule: DistanceRule::Band,
            ssc_max_trials: 12,
            ssc_subset_fraction: 1.0,
            ssc_whole_parent: false,
            allow_scd_moead: false,
        }
    }
}

impl SemanticConfig {
    pub fn with_approach(approach: Approach) -> Self {
        SemanticConfig {
            approach,
            ..Self::default()
        }
    }

    pub fn validate(&self, engine: EngineKind) -> Result<(), VariantError> {
        if self.ssc_max_trials == 0 {
            return Err(VariantError::Trials);
        }
        if !(self.ssc_subset_fraction > 0.0 && self.ssc_subset_fraction <= 1.0) {
            return Err(VariantError::SubsetFraction(self.ssc_subset_fraction));
        }
        if engine == EngineKind::Moead && self.approach == Approach::Scd && !self.allow_scd_moead {
            return Err(VariantError::ScdWithMoead);
        }
        Ok(())
    }
}

/// Offspring of one SSC call and how they were obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct SscOutcome {
    pub offspring: (ProgramTree, ProgramTree),
    /// Crossover attempts made, between 1 and `ssc_max_trials`.
    pub trials: usize,
    /// Whether an attempt fell within the bounds (otherwise the last
    /// attempt's offspring are returned).
    pub accepted: bool,
}

/// Semantic similarity-based crossover.
pub fn ssc_crossover<R: Rng + ?Sized>(
    p1: &Individual,
    p2: &Individual,
    cfg: &SemanticConfig,
    inputs: &Inputs,
    rng: &mut R,
    max_depth: usize,
) -> SscOutcome {
    let l = p1.semantics.len();
    let subset: Option<Vec<usize>> = (cfg.ssc_subset_fraction < 1.0 && l > 0).then(|| {
        let k = ((cfg.ssc_subset_fraction * l as f64).ceil() as usize).clamp(1, l);
        let mut idx = index::sample(rng, l, k).into_vec();
        idx.sort_unstable();
        idx
    });
    let mut last = None;
    for trial in 1..=cfg.ssc_max_trials {
        let out = gp::crossover_with_points(&p1.tree, &p2.tree, rng, max_depth);
        let distance = if cfg.ssc_whole_parent {
            ssc_distance(&p1.semantics, &p2.semantics, subset.as_deref()).ok()
        } else {
            out.exchanged.as_ref().and_then(|(r1, r2)| {
                let s1 = p1.tree.evaluate_subtree(r1.clone(), inputs);
                let s2 = p2.tree.evaluate_subtree(r2.clone(), inputs);
                ssc_distance(&s1, &s2, subset.as_deref()).ok()
            })
        };
        if distance.is_some_and(|d| cfg.bounds.contains(d)) {
            return SscOutcome {
                offspring: out.offspring,
                trials: trial,
                accepted: true,
            };
        }
        last = Some(out.offspring);
    }
    SscOutcome {
        offspring: last.expect("at least one trial"),
        trials: cfg.ssc_max_trials,
        accepted: false,
    }
}

/// Distance count of every member to the pivot under the configured rule.
pub fn scd_assign(members: &[&SemanticsVector], pivot: &Pivot, cfg: &SemanticConfig) -> Vec<f64> {
    members
        .iter()
        .map(|s| {
            rule_distance(cfg.distance_rule, s, &pivot.semantics, &cfg.bounds)
                .expect("semantics share the fitness-case count") as f64
        })
        .collect()
}

/// Third objective: `−d / l`, so larger distance counts are better under minimisation.
pub fn sdo_criterion(semantics: &[f64], pivot: &Pivot, cfg: &SemanticConfig) -> f64 {
    let l = semantics.len();
    let d = rule_distance(cfg.distance_rule, semantics, &pivot.semantics, &cfg.bounds)
        .expect("semantics share the fitness-case count");
    -(d as f64) / l as f64
}

/// Replaces every member's objectives with its base objectives plus the
/// semantic criterion.
pub fn sdo_extend(members: &mut [Individual], pivot: &Pivot, cfg: &SemanticConfig) {
    for m in members {
        let extra = sdo_criterion(&m.semantics, pivot, cfg);
        let mut values = m.base.0.clone();
        values.push(extra);
        m.objectives = values.into();
    }
}

/// Pivot from the first front (on base objectives) of `members`.
pub fn choose_pivot<R: Rng + ?Sized>(members: &[Individual], rng: &mut R) -> Pivot {
    let base: Vec<&[f64]> = members.iter().map(|m| &m.base[..]).collect();
    let partition = fast_nondominated_sort(&base).expect("base objectives share one length");
    let front = partition.first();
    let front_objs: Vec<&[f64]> = front.iter().map(|&i| base[i]).collect();
    let crowding = crowding_distance(&front_objs);
    let sems: Vec<&SemanticsVector> = front.iter().map(|&i| &members[i].semantics).collect();
    select_pivot(&sems, &crowding, rng).expect("first front of a non-empty set is non-empty")
}

/// Counters kept by [`SemanticMechanism`] for diagnostics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SscTally {
    pub calls: usize,
    pub accepted: usize,
    pub trials: usize,
}

/// [`SemanticHooks`] implementation driven by a [`SemanticConfig`].
pub struct SemanticMechanism<'p> {
    cfg: SemanticConfig,
    problem: &'p Problem,
    pivot: Option<Pivot>,
    tally: SscTally,
}

impl<'p> SemanticMechanism<'p> {
    pub fn new(cfg: SemanticConfig, problem: &'p Problem) -> Self {
        SemanticMechanism {
            cfg,
            problem,
            pivot: None,
            tally: SscTally::default(),
        }
    }

    pub fn pivot(&self) -> Option<&Pivot> {
        self.pivot.as_ref()
    }

    pub fn ssc_tally(&self) -> SscTally {
        self.tally
    }
}

impl SemanticHooks for SemanticMechanism<'_> {
    fn n_objectives(&self) -> usize {
        if self.cfg.approach == Approach::Sdo {
            3
        } else {
            2
        }
    }

    fn crossover<R: Rng + ?Sized>(
        &mut self,
        p1: &Individual,
        p2: &Individual,
        max_depth: usize,
        rng: &mut R,
    ) -> (ProgramTree, ProgramTree) {
        if self.cfg.approach != Approach::Ssc {
            return gp::subtree_crossover(&p1.tree, &p2.tree, rng, max_depth);
        }
        let out = ssc_crossover(p1, p2, &self.cfg, self.problem.inputs(), rng, max_depth);
        self.tally.calls += 1;
        self.tally.trials += out.trials;
        self.tally.accepted += usize::from(out.accepted);
        out.offspring
    }

    fn prepare<R: Rng + ?Sized>(&mut self, members: &mut [Individual], rng: &mut R) -> Option<Vec<f64>> {
        match self.cfg.approach {
            Approach::Canonical | Approach::Ssc => None,
            Approach::Scd => {
                let pivot = choose_pivot(members, rng);
                let sems: Vec<&SemanticsVector> = members.iter().map(|m| &m.semantics).collect();
                let surrogate = scd_assign(&sems, &pivot, &self.cfg);
                self.pivot = Some(pivot);
                Some(surrogate)
            }
            Approach::Sdo => {
                let pivot = choose_pivot(members, rng);
                sdo_extend(members, &pivot, &self.cfg);
                self.pivot = Some(pivot);
                None
            }
        }
    }

    fn annotate(&self, child: &mut Individual) -> Option<f64> {
        let pivot = self.pivot.as_ref()?;
        match self.cfg.approach {
            Approach::Sdo => {
                sdo_extend(std::slice::from_mut(child), pivot, &self.cfg);
                None
            }
            Approach::Scd => Some(scd_assign(&[&child.semantics], pivot, &self.cfg)[0]),
            _ => None,
        }
    }
}

/// Runs `engine` with the semantic approach in `cfg`. The reported front and
/// statistics are always on the two base objectives.
pub fn run_variant<R: Rng + ?Sized>(
    engine: EngineKind,
    cfg: &SemanticConfig,
    problem: &Problem,
    params: &EngineParams,
    rng: &mut R,
) -> Result<EngineRun, VariantError> {
    cfg.validate(engine)?;
    let hooks = SemanticMechanism::new(cfg.clone(), problem);
    Ok(emo::run_engine(engine, problem, params, hooks, rng)?)
}
