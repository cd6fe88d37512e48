//! Experiment driver: configuration, seeded runs, result files and summaries.
//!
//! Each run writes two files into the output directory:
//!
//! * `<stem>.json`: the [`RunResult`] (config echo, metadata, final front,
//!   per-generation statistics);
//! * `<stem>_generations.csv`: `generation,hypervolume,unique_count,mean_nodes,front_size`.
//!
//! Both are deterministic functions of the config and seed. Wall-clock time
//! is returned in [`RunRecord`] but never written to them.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{self, DatasetError, MinMaxScaler};
use crate::emo::{EngineKind, EngineParams, GpParams, MoeadParams, UniqueBy};
use crate::gp::{GpError, PrimitiveSet};
use crate::metrics::{median, GenerationStats, REFERENCE_POINT};
use crate::problem::Problem;
use crate::semantic_emo::{run_variant, Approach, SemanticConfig, VariantError};
use crate::semantics::SimilarityBounds;

/// Placeholder LBSS values for grid sweeps (not taken from any published study).
pub const DEFAULT_LBSS_GRID: [f64; 4] = [0.001, 0.01, 0.1, 0.2];
/// Placeholder UBSS values for grid sweeps.
pub const DEFAULT_UBSS_GRID: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Variant(#[from] VariantError),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("nothing to summarize")]
    NoResults,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    /// Defaults to the last column.
    pub label_column: Option<usize>,
    /// Defaults to the rarer label.
    pub positive_label: Option<String>,
    /// Min-max scale features, fitted on the training split.
    pub normalize: bool,
}

/// Cross-product of bounds to sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsGrid {
    pub lbss: Vec<f64>,
    pub ubss: Vec<f64>,
}

impl Default for BoundsGrid {
    fn default() -> Self {
        BoundsGrid {
            lbss: DEFAULT_LBSS_GRID.to_vec(),
            ubss: DEFAULT_UBSS_GRID.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub engine: EngineKind,
    pub semantic: SemanticConfig,
    pub gp: GpParams,
    pub spea2_archive: Option<usize>,
    pub moead: MoeadParams,
    pub unique_by: UniqueBy,
    /// Stratified train fraction; `None` trains on every case.
    pub split_fraction: Option<f64>,
    pub seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<BoundsGrid>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetConfig::default(),
            engine: EngineKind::Nsga2,
            semantic: SemanticConfig::default(),
            gp: GpParams::default(),
            spea2_archive: None,
            moead: MoeadParams::default(),
            unique_by: UniqueBy::default(),
            split_fraction: None,
            seeds: vec![0],
            out_dir: None,
            grid: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|source| HarnessError::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn engine_params(&self) -> EngineParams {
        EngineParams {
            gp: self.gp.clone(),
            spea2_archive: self.spea2_archive,
            moead: self.moead.clone(),
            unique_by: self.unique_by,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("seeds list is empty".into()));
        }
        if let Some(f) = self.split_fraction {
            if !(f > 0.0 && f < 1.0) {
                return Err(HarnessError::Config(format!("split_fraction {f} not in (0, 1)")));
            }
        }
        if self.spea2_archive == Some(0) {
            return Err(HarnessError::Config("spea2_archive must be at least 1".into()));
        }
        self.gp
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.semantic.validate(self.engine)?;
        Ok(())
    }

    /// The echo stored in a result: this config narrowed to one seed, with
    /// no grid and no output directory.
    pub fn echo_for(&self, seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            seeds: vec![seed],
            out_dir: None,
            grid: None,
            ..self.clone()
        }
    }

    /// Expands `grid` into one config per valid `(lbss, ubss)` pair
    /// (pairs with `lbss > ubss` are skipped). Without a grid, returns the
    /// config itself.
    pub fn expand_grid(&self) -> Vec<ExperimentConfig> {
        let Some(grid) = &self.grid else {
            return vec![self.clone()];
        };
        let mut out = Vec::new();
        for &l in &grid.lbss {
            for &u in &grid.ubss {
                if let Ok(bounds) = SimilarityBounds::new(l, u) {
                    let mut cfg = self.clone();
                    cfg.grid = None;
                    cfg.semantic.bounds = bounds;
                    out.push(cfg);
                }
            }
        }
        out
    }

    /// File-name stem shared by all runs of this configuration.
    pub fn stem(&self, seed: u64) -> String {
        let b = &self.semantic.bounds;
        format!(
            "{}-{}-l{}-u{}-{}-seed{}",
            self.engine,
            self.semantic.approach,
            b.lbss(),
            b.ubss(),
            self.semantic.distance_rule,
            seed
        )
    }
}

/// Runtime options that do not influence results.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads for evaluation and concurrent seeds; 1 runs serially,
    /// 0 uses every available core.
    pub workers: usize,
    /// Write result files (requires `out_dir`).
    pub write: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { workers: 1, write: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub reference_point: [f64; 2],
    pub objective_space: String,
    /// Whether features were min-max scaled before evaluation.
    pub normalized_features: bool,
    /// Which cases `objectives` and the statistics refer to.
    pub metrics_on: String,
    pub train_cases: usize,
    pub test_cases: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontMember {
    /// Prefix form, e.g. `(+ x0 (* 0.5 x1))`.
    pub program: String,
    /// `(1 − TPR, 1 − TNR)` on the training cases.
    pub objectives: [f64; 2],
    /// Same on the held-out cases, when a split is configured.
    pub test_objectives: Option<[f64; 2]>,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub config: ExperimentConfig,
    pub metadata: RunMetadata,
    pub front: Vec<FrontMember>,
    pub generations: Vec<GenerationStats>,
}

impl RunResult {
    pub fn final_stats(&self) -> &GenerationStats {
        self.generations.last().expect("at least one generation")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("results serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn generations_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for g in &self.generations {
            w.serialize(g).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
    }
}

/// A finished run with where it was written and how long it took.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub result: RunResult,
    pub wall_time: Duration,
    pub files: Option<(PathBuf, PathBuf)>,
}

fn pair(v: &[f64]) -> [f64; 2] {
    [v[0], v[1]]
}

/// Runs a single seed of `cfg` in memory.
pub fn run_once(cfg: &ExperimentConfig, data: &dataset::Dataset, seed: u64, parallel: bool) -> Result<RunResult, HarnessError> {
    let (mut train, mut test) = match cfg.split_fraction {
        Some(f) => {
            let (a, b) = dataset::stratified_split(data, f, seed)?;
            (a, Some(b))
        }
        None => (data.clone(), None),
    };
    if cfg.dataset.normalize {
        let scaler = MinMaxScaler::fit(&train);
        train = scaler.transform(&train);
        test = test.map(|t| scaler.transform(&t));
    }
    let primitives = PrimitiveSet::arithmetic(train.n_features())?;
    let problem = Problem::new(&train, primitives.clone()).with_parallel(parallel);
    let test_problem = test.as_ref().map(|t| Problem::new(t, primitives));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let run = run_variant(cfg.engine, &cfg.semantic, &problem, &cfg.engine_params(), &mut rng)?;

    let front = run
        .front
        .iter()
        .map(|m| FrontMember {
            program: m.tree.to_string(),
            objectives: pair(&m.base),
            test_objectives: test_problem
                .as_ref()
                .map(|p| pair(&p.objectives_of(&m.tree.evaluate(p.inputs())))),
            nodes: m.node_count(),
        })
        .collect();
    Ok(RunResult {
        seed,
        config: cfg.echo_for(seed),
        metadata: RunMetadata {
            reference_point: REFERENCE_POINT,
            objective_space: "(1-TPR, 1-TNR), unnormalized".into(),
            normalized_features: cfg.dataset.normalize,
            metrics_on: "train".into(),
            train_cases: train.len(),
            test_cases: test.as_ref().map(|t| t.len()),
        },
        front,
        generations: run.stats,
    })
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory followed by a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), HarnessError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(contents).map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

pub fn write_result(result: &RunResult, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf), HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let json = dir.join(format!("{stem}.json"));
    let csv = dir.join(format!("{stem}_generations.csv"));
    write_atomic(&json, result.to_json().as_bytes())?;
    write_atomic(&csv, result.generations_csv().as_bytes())?;
    Ok((json, csv))
}

/// Runs every seed of `cfg` (one config; see [`ExperimentConfig::expand_grid`]).
pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Vec<RunRecord>, HarnessError> {
    cfg.validate()?;
    if opts.write && cfg.out_dir.is_none() {
        return Err(HarnessError::Config("out_dir is required to write results".into()));
    }
    let data = dataset::load_csv(
        &cfg.dataset.path,
        cfg.dataset.label_column,
        cfg.dataset.positive_label.as_deref(),
    )?;
    let parallel = opts.workers != 1;
    let one = |seed: u64| -> Result<RunRecord, HarnessError> {
        let start = Instant::now();
        let result = run_once(cfg, &data, seed, parallel)?;
        let wall_time = start.elapsed();
        let files = match (&cfg.out_dir, opts.write) {
            (Some(dir), true) => Some(write_result(&result, dir, &cfg.stem(seed))?),
            _ => None,
        };
        Ok(RunRecord { result, wall_time, files })
    };
    if parallel {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
        pool.install(|| cfg.seeds.par_iter().map(|&s| one(s)).collect())
    } else {
        cfg.seeds.iter().map(|&s| one(s)).collect()
    }
}

/// Loads every `*.json` result in `dir`, in file-name order.
pub fn read_results(dir: &Path) -> Result<Vec<RunResult>, HarnessError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(io_err(p))?;
            RunResult::from_json(&text).map_err(|source| HarnessError::Json {
                path: p.clone(),
                source,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderStats {
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl OrderStats {
    fn of(values: &[f64]) -> Self {
        OrderStats {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            median: median(values),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub label: String,
    pub runs: usize,
    pub hypervolume: OrderStats,
    pub unique_count: OrderStats,
    pub mean_nodes: OrderStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub groups: Vec<GroupSummary>,
    /// `(numerator, denominator, median unique_count ratio)` for every
    /// ordered pair of distinct groups.
    pub unique_ratios: Vec<(String, String, f64)>,
}

impl Summary {
    pub fn group(&self, label: &str) -> Option<&GroupSummary> {
        self.groups.iter().find(|g| g.label == label)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    pub fn ratio(&self, numerator: &str, denominator: &str) -> Option<f64> {
        self.unique_ratios
            .iter()
            .find(|(a, b, _)| a == numerator && b == denominator)
            .map(|r| r.2)
    }
}

/// Group label: engine and approach, plus bounds and rule for semantic approaches.
pub fn group_label(cfg: &ExperimentConfig) -> String {
    match cfg.semantic.approach {
        Approach::Canonical => format!("{}/canonical", cfg.engine),
        a => {
            let b = &cfg.semantic.bounds;
            format!(
                "{}/{} lbss={} ubss={} {}",
                cfg.engine,
                a,
                b.lbss(),
                b.ubss(),
                cfg.semantic.distance_rule
            )
        }
    }
}

/// Order statistics of the final generation per configuration, and the
/// pairwise ratios of median unique-solution counts.
pub fn summarize(results: &[RunResult]) -> Result<Summary, HarnessError> {
    if results.is_empty() {
        return Err(HarnessError::NoResults);
    }
    let mut groups: BTreeMap<String, Vec<&GenerationStats>> = BTreeMap::new();
    for r in results {
        groups
            .entry(group_label(&r.config))
            .or_default()
            .push(r.final_stats());
    }
    let groups: Vec<GroupSummary> = groups
        .into_iter()
        .map(|(label, stats)| {
            let col = |f: fn(&GenerationStats) -> f64| OrderStats::of(&stats.iter().map(|s| f(s)).collect::<Vec<_>>());
            GroupSummary {
                label,
                runs: stats.len(),
                hypervolume: col(|s| s.hypervolume),
                unique_count: col(|s| s.unique_count as f64),
                mean_nodes: col(|s| s.mean_nodes),
            }
        })
        .collect();
    let mut unique_ratios = Vec::new();
    for a in &groups {
        for b in &groups {
            if a.label != b.label {
                unique_ratios.push((
                    a.label.clone(),
                    b.label.clone(),
                    a.unique_count.median / b.unique_count.median,
                ));
            }
        }
    }
    Ok(Summary { groups, unique_ratios })
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.groups.iter().map(|g| g.label.len()).max().unwrap_or(0).max(6);
        writeln!(
            f,
            "{:width$}  {:>4}  {:>33}  {:>29}  {:>33}",
            "config", "runs", "hypervolume mean/med/min/max", "unique mean/med/min/max", "nodes mean/med/min/max"
        )?;
        for g in &self.groups {
            let h = &g.hypervolume;
            let u = &g.unique_count;
            let n = &g.mean_nodes;
            writeln!(
                f,
                "{:width$}  {:>4}  {:>7.4} {:>7.4} {:>7.4} {:>7.4}  {:>6.1} {:>6.1} {:>6.1} {:>6.1}  {:>7.1} {:>7.1} {:>7.1} {:>7.1}",
                g.label, g.runs, h.mean, h.median, h.min, h.max, u.mean, u.median, u.min, u.max, n.mean, n.median, n.min, n.max
            )?;
        }
        if !self.unique_ratios.is_empty() {
            writeln!(f)?;
            writeln!(f, "median unique-solution ratios (row / column):")?;
            for (a, b, r) in &self.unique_ratios {
                writeln!(f, "  {a}  /  {b}  =  {r:.3}")?;
            }
        }
        Ok(())
    }
}

/// Two Gaussian blobs in 2-D: the positive class (1 in `1 + imbalance`
/// cases) centred at (1, 1), the negative class at (0, 0), unit variance.
/// Returns CSV text with header `x0,x1,label` and labels `pos`/`neg`.
pub fn gen_synth(n: usize, imbalance: f64, seed: u64) -> Result<String, HarnessError> {
    if n < 4 {
        return Err(HarnessError::Config(format!("synthetic dataset needs at least 4 rows, got {n}")));
    }
    if !(imbalance.is_finite() && imbalance >= 1.0) {
        return Err(HarnessError::Config(format!("imbalance {imbalance} must be ≥ 1")));
    }
    let n_pos = ((n as f64 / (imbalance + 1.0)).round() as usize).clamp(2, n - 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rows: Vec<(f64, f64, &str)> = (0..n)
        .map(|i| {
            let (centre, label) = if i < n_pos { (1.0, "pos") } else { (0.0, "neg") };
            (centre + noise.sample(&mut rng), centre + noise.sample(&mut rng), label)
        })
        .collect();
    rand::seq::SliceRandom::shuffle(rows.as_mut_slice(), &mut rng);
    let mut out = String::from("x0,x1,label\n");
    for (a, b, label) in rows {
        out.push_str(&format!("{a:.6},{b:.6},{label}\n"));
    }
    Ok(out)
}
