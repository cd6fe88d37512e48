//! Semantic multi-objective genetic programming.
//!
//! GP classifiers for imbalanced binary problems are evolved against the
//! conflicting objectives `(1 − TPR, 1 − TNR)` with NSGA-II, SPEA2 or
//! MOEA/D. Three semantic mechanisms can be switched on:
//! similarity-based crossover (SSC), a semantic crowding distance (SCD) and
//! a semantic distance used as an additional objective (SDO).
//!
//! Module layout:
//!
//! * [`dataset`]: CSV loading, stratified splits, scaling
//! * [`gp`]: program trees, initialisation, crossover, mutation, evaluation
//! * [`objectives`]: thresholding and confusion-based objectives
//! * [`semantics`]: semantic distances and pivot selection
//! * [`emo`]: dominance, sorting, crowding and the three engines
//! * [`semantic_emo`]: SSC, SCD and SDO wired into the engines
//! * [`metrics`]: hypervolume, unique solutions, program size
//! * [`harness`]: experiment configuration, runs, result files, summaries

pub mod dataset;
pub mod emo;
pub mod gp;
pub mod harness;
pub mod metrics;
pub mod objectives;
pub mod problem;
pub mod semantic_emo;
pub mod semantics;

pub use dataset::{load_csv, stratified_split, Dataset, Label};
pub use emo::{EngineKind, EngineParams, GpParams};
pub use gp::{ProgramTree, SemanticsVector};
pub use objectives::ObjectiveVector;
pub use problem::{Individual, Problem};
pub use semantic_emo::{run_variant, Approach, SemanticConfig};
pub use semantics::{DistanceRule, SimilarityBounds};
