use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use semogp::harness::{self, BoundsGrid, ExperimentConfig, RunOptions};
use semogp::{Approach, EngineKind};

#[derive(Parser)]
#[command(name = "semogp", version, about = "Semantic multi-objective GP for imbalanced binary classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Run this single seed instead of the config's seed list.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        engine: Option<EngineKind>,
        #[arg(long)]
        approach: Option<Approach>,
        /// LBSS value, or a comma-separated list to sweep.
        #[arg(long, value_delimiter = ',')]
        lbss: Vec<f64>,
        /// UBSS value, or a comma-separated list to sweep.
        #[arg(long, value_delimiter = ',')]
        ubss: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Aggregate the result files in a directory.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Write a two-blob imbalanced synthetic dataset as CSV.
    GenSynth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        n: usize,
        /// Negatives per positive.
        #[arg(long, default_value_t = 9.0)]
        imbalance: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn bounds_grid(base: &ExperimentConfig, lbss: Vec<f64>, ubss: Vec<f64>) -> Option<BoundsGrid> {
    if lbss.is_empty() && ubss.is_empty() {
        return base.grid.clone();
    }
    let current = base.grid.clone().unwrap_or_else(|| BoundsGrid {
        lbss: vec![base.semantic.bounds.lbss()],
        ubss: vec![base.semantic.bounds.ubss()],
    });
    Some(BoundsGrid {
        lbss: if lbss.is_empty() { current.lbss } else { lbss },
        ubss: if ubss.is_empty() { current.ubss } else { ubss },
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, seed, engine, approach, lbss, ubss, out, workers } => {
            let mut cfg = ExperimentConfig::from_json_file(&config)?;
            if let Some(s) = seed {
                cfg.seeds = vec![s];
            }
            if let Some(e) = engine {
                cfg.engine = e;
            }
            if let Some(a) = approach {
                cfg.semantic.approach = a;
            }
            if let Some(o) = out {
                cfg.out_dir = Some(o);
            }
            if cfg.out_dir.is_none() {
                bail!("no output directory: pass --out or set out_dir in the config");
            }
            if cfg.dataset.path.is_relative() {
                if let Some(dir) = config.parent() {
                    cfg.dataset.path = dir.join(&cfg.dataset.path);
                }
            }
            cfg.grid = bounds_grid(&cfg, lbss, ubss);
            let expanded = cfg.expand_grid();
            if expanded.is_empty() {
                bail!("bounds grid has no pair with lbss <= ubss");
            }
            let opts = RunOptions { workers, write: true };
            for c in &expanded {
                let records = harness::run_experiment(c, opts)
                    .with_context(|| format!("configuration {}", harness::group_label(c)))?;
                for r in records {
                    let last = r.result.final_stats();
                    let path = r.files.as_ref().map(|(j, _)| j.display().to_string()).unwrap_or_default();
                    println!(
                        "{}  seed {}  hv {:.4}  unique {}  nodes {:.1}  {:.2}s  {}",
                        harness::group_label(c),
                        r.result.seed,
                        last.hypervolume,
                        last.unique_count,
                        last.mean_nodes,
                        r.wall_time.as_secs_f64(),
                        path
                    );
                }
            }
        }
        Command::Summarize { input, json } => {
            let results = harness::read_results(&input)?;
            let summary = harness::summarize(&results)?;
            if json {
                println!("{}", summary.to_json());
            } else {
                print!("{summary}");
            }
        }
        Command::GenSynth { out, n, imbalance, seed } => {
            let text = harness::gen_synth(n, imbalance, seed)?;
            harness::write_atomic(&out, text.as_bytes())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
