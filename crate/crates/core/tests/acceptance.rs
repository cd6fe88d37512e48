//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fail.

mod common;

use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semogp::emo::{self, fast_nondominated_sort, spea2_fitness, tchebycheff, Canonical, EngineKind, EngineParams, GpParams, Moead, UniqueBy};
use semogp::gp::PrimitiveSet;
use semogp::harness::{self, DatasetConfig, ExperimentConfig, RunOptions};
use semogp::metrics::{hypervolume_2d, REFERENCE_POINT};
use semogp::semantic_emo::{sdo_extend, ssc_crossover, SemanticMechanism};
use semogp::semantics::{distance_above_ubss, distance_in_band, Pivot};
use semogp::{run_variant, Approach, SemanticConfig, SimilarityBounds};

use common::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    check(
        elapsed <= Duration::from_secs(limit_s),
        format!("took {:.1}s, limit {limit_s}s", elapsed.as_secs_f64()),
    )
}

/// 100 random populations, n ≤ 500, two and three objectives, vs peeling. Limit 30 s.
fn nondominated_sort_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..100 {
        let n = rng.random_range(1..=500);
        let m = if case % 2 == 0 { 2 } else { 3 };
        let grid = if case % 4 < 2 { Some(10) } else { None };
        let pts = random_points(&mut rng, n, m, grid);
        let got = fast_nondominated_sort(&pts).map_err(|e| e.to_string())?;
        check(got.fronts == peel_fronts(&pts), format!("population {case} (n={n}, m={m}) differs"))?;
    }
    within(start.elapsed(), 30)?;
    Ok(format!("100 populations in {:.2}s", start.elapsed().as_secs_f64()))
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// 50 random populations, n ≤ 100, strength/raw/density to 1e-12 relative. Limit 10 s.
fn spea2_fitness_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..50 {
        let n = rng.random_range(2..=100);
        let grid = if case % 2 == 0 { Some(12) } else { None };
        let pts = random_points(&mut rng, n, 2, grid);
        let split = rng.random_range(0..=n);
        let f = spea2_fitness(&pts[..split], &pts[split..]);
        let b = brute_spea2(&pts);
        for i in 0..n {
            check(
                rel_close(f.strength[i] as f64, b.strength[i], 1e-12)
                    && rel_close(f.raw[i], b.raw[i], 1e-12)
                    && rel_close(f.density[i], b.density[i], 1e-12),
                format!("population {case}, member {i} differs"),
            )?;
        }
    }
    within(start.elapsed(), 10)?;
    Ok(format!("50 populations in {:.2}s", start.elapsed().as_secs_f64()))
}

/// Exact sweep vs 10⁶-sample Monte Carlo on 20 fronts (±0.005), plus hand values. Limit 20 s.
fn hypervolume_oracle() -> Outcome {
    let start = Instant::now();
    let one = [1.0, 1.0];
    check(hypervolume_2d(&[[0.5, 0.5]], one) == 0.25, "single point is not exactly 0.25")?;
    let two = hypervolume_2d(&[[0.2, 0.8], [0.6, 0.4]], one);
    check(two == 0.32, format!("two-point front gives {two:?}, not exactly 0.32"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let n = rng.random_range(1..=50);
        let front: Vec<[f64; 2]> = if case % 2 == 0 {
            // mutually non-dominated staircase
            let mut xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let mut ys: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            xs.sort_by(f64::total_cmp);
            ys.sort_by(|a, b| b.total_cmp(a));
            xs.into_iter().zip(ys).map(|(x, y)| [x, y]).collect()
        } else {
            (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect()
        };
        let exact = hypervolume_2d(&front, REFERENCE_POINT);
        let mc = mc_hypervolume(&front, REFERENCE_POINT, 1_000_000, 100 + case);
        worst = worst.max((exact - mc).abs());
        check((exact - mc).abs() <= 0.005, format!("front {case}: exact {exact:.5} vs MC {mc:.5}"))?;
    }
    within(start.elapsed(), 20)?;
    Ok(format!("max |exact − MC| = {worst:.5} in {:.2}s", start.elapsed().as_secs_f64()))
}

/// 10⁴ random pairs with random lbss ≤ ubss: above-ubss + in-band + below-lbss = l.
fn distance_partition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..10_000 {
        let l = rng.random_range(1..=60);
        let scale = [0.01, 1.0, 100.0][case % 3];
        let a: Vec<f64> = (0..l).map(|_| rng.random_range(-scale..scale)).collect();
        let mut b: Vec<f64> = (0..l).map(|_| rng.random_range(-scale..scale)).collect();
        if case % 5 == 0 {
            b[..l / 2].copy_from_slice(&a[..l / 2]);
        }
        let x: f64 = rng.random_range(0.0..scale);
        let y: f64 = rng.random_range(0.0..scale);
        let bounds = SimilarityBounds::new(x.min(y), x.max(y)).map_err(|e| e.to_string())?;
        let above = distance_above_ubss(&a, &b, &bounds).map_err(|e| e.to_string())?;
        let band = distance_in_band(&a, &b, &bounds).map_err(|e| e.to_string())?;
        let below = a.iter().zip(&b).filter(|(p, q)| (*p - *q).abs() < bounds.lbss()).count();
        check(above + band + below == l, format!("pair {case}: {above} + {band} + {below} ≠ {l}"))?;
    }
    Ok("10000 pairs".into())
}

/// Fallback after exactly ssc_max_trials for identical parents; first-trial
/// acceptance under vacuous bounds.
fn ssc_gating() -> Outcome {
    let problem = synthetic_problem(60, 5);
    let prims = PrimitiveSet::arithmetic(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let tight = SimilarityBounds::new(0.05, 1.0).unwrap();
    for trials in [1, 3, 12] {
        for seed in 0..20 {
            let terminal = problem.evaluate("x1".parse().unwrap());
            let cfg = SemanticConfig { approach: Approach::Ssc, bounds: tight, ssc_max_trials: trials, ..SemanticConfig::default() };
            let out = ssc_crossover(&terminal, &terminal.clone(), &cfg, problem.inputs(), &mut ChaCha8Rng::seed_from_u64(seed), 17);
            check(!out.accepted && out.trials == trials, format!("terminal parents: {} trials, accepted {}", out.trials, out.accepted))?;

            let parent = problem.evaluate(prims.grow_tree(5, &mut rng));
            let whole = SemanticConfig { ssc_whole_parent: true, ..cfg };
            let out = ssc_crossover(&parent, &parent.clone(), &whole, problem.inputs(), &mut ChaCha8Rng::seed_from_u64(seed), 17);
            check(!out.accepted && out.trials == trials, format!("identical parents: {} trials", out.trials))?;
        }
    }
    for seed in 0..50 {
        let a = problem.evaluate(prims.grow_tree(4, &mut rng));
        let b = problem.evaluate(prims.grow_tree(4, &mut rng));
        let cfg = SemanticConfig { approach: Approach::Ssc, bounds: SimilarityBounds::vacuous(), ..SemanticConfig::default() };
        let out = ssc_crossover(&a, &b, &cfg, problem.inputs(), &mut ChaCha8Rng::seed_from_u64(seed), 17);
        check(out.accepted && out.trials == 1, format!("vacuous bounds took {} trials", out.trials))?;
    }
    Ok("fallback after 1/3/12 trials; vacuous accepts on trial 1".into())
}

/// run_variant(canonical) bit-identical to the bare engine, 5 seeds, NSGA-II and SPEA2.
fn canonical_regression() -> Outcome {
    let problem = synthetic_problem(200, 0);
    let params = EngineParams { gp: GpParams { pop_size: 40, generations: 10, ..GpParams::default() }, ..EngineParams::default() };
    let cfg = SemanticConfig::with_approach(Approach::Canonical);
    for engine in [EngineKind::Nsga2, EngineKind::Spea2] {
        for seed in 0..5 {
            let a = run_variant(engine, &cfg, &problem, &params, &mut ChaCha8Rng::seed_from_u64(seed)).map_err(|e| e.to_string())?;
            let b = emo::run_engine(engine, &problem, &params, Canonical, &mut ChaCha8Rng::seed_from_u64(seed)).map_err(|e| e.to_string())?;
            check(format!("{a:?}") == format!("{b:?}"), format!("{engine} seed {seed} differs"))?;
        }
    }
    Ok("10 runs identical".into())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Synthetic 1:9, n = 200, pop 100, 30 generations, 11 seeds, default bounds:
/// median unique(SDO) ≥ 1.2 × median unique(canonical) and median HV(SDO) ≥
/// median HV(canonical), single-threaded in under 5 minutes.
fn desk_scale_trend() -> Outcome {
    const RATIO: f64 = 1.2;
    let start = Instant::now();
    let problem = synthetic_problem(200, 0);
    let params = EngineParams::default();
    let mut summary = Vec::new();
    for approach in [Approach::Canonical, Approach::Sdo] {
        let cfg = SemanticConfig::with_approach(approach);
        let mut unique = Vec::new();
        let mut hv = Vec::new();
        for seed in 0..11 {
            let run = run_variant(EngineKind::Nsga2, &cfg, &problem, &params, &mut ChaCha8Rng::seed_from_u64(seed)).map_err(|e| e.to_string())?;
            let last = run.stats.last().unwrap();
            unique.push(last.unique_count as f64);
            hv.push(last.hypervolume);
        }
        summary.push((median(unique), median(hv)));
    }
    let (cu, ch) = summary[0];
    let (su, sh) = summary[1];
    let detail = format!(
        "median unique sdo {su} vs canonical {cu} (ratio {:.3}, need ≥ {RATIO}); median HV sdo {sh:.4} vs canonical {ch:.4}; {:.1}s",
        su / cu,
        start.elapsed().as_secs_f64()
    );
    check(su >= RATIO * cu && sh >= ch, detail.clone())?;
    within(start.elapsed(), 300)?;
    Ok(detail)
}

/// SDO reports 2-entry non-dominated fronts; the extension never alters (O1, O2).
fn sdo_invariants() -> Outcome {
    let problem = synthetic_problem(120, 6);
    let params = EngineParams { gp: GpParams { pop_size: 30, generations: 8, ..GpParams::default() }, ..EngineParams::default() };
    let cfg = SemanticConfig::with_approach(Approach::Sdo);
    for engine in [EngineKind::Nsga2, EngineKind::Spea2, EngineKind::Moead] {
        for seed in 0..3 {
            let run = run_variant(engine, &cfg, &problem, &params, &mut ChaCha8Rng::seed_from_u64(seed)).map_err(|e| e.to_string())?;
            for a in &run.front {
                check(a.base.len() == 2, format!("{engine}: reported vector of length {}", a.base.len()))?;
                for b in &run.front {
                    check(!dominated_by(&a.base, &b.base), format!("{engine} seed {seed}: dominated member reported"))?;
                }
            }
        }
    }
    let prims = PrimitiveSet::arithmetic(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut members: Vec<_> = (0..10_000).map(|i| problem.evaluate(prims.grow_tree(1 + i % 8, &mut rng))).collect();
    let before: Vec<Vec<u64>> = members.iter().map(|m| m.base.iter().map(|v| v.to_bits()).collect()).collect();
    for chunk in members.chunks_mut(500) {
        let pivot = Pivot { semantics: chunk[rng.random_range(0..chunk.len())].semantics.clone(), index: 0 };
        sdo_extend(chunk, &pivot, &cfg);
    }
    for (m, b) in members.iter().zip(&before) {
        let first_two: Vec<u64> = m.objectives[..2].iter().map(|v| v.to_bits()).collect();
        let base: Vec<u64> = m.base.iter().map(|v| v.to_bits()).collect();
        let fresh: Vec<u64> = problem.objectives_of(&m.semantics).iter().map(|v| v.to_bits()).collect();
        check(m.objectives.len() == 3 && &first_two == b && &base == b && &fresh == b, "extension changed (O1, O2)")?;
    }
    Ok("9 runs, 10000 extended individuals".into())
}

/// Identical config and seed give byte-identical files, serial and fully parallel.
fn end_to_end_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = dir.path().join("synth.csv");
    fs::write(&data, harness::gen_synth(200, 9.0, 0).unwrap()).map_err(|e| e.to_string())?;
    let mut files = 0;
    for (engine, approach) in [
        (EngineKind::Nsga2, Approach::Sdo),
        (EngineKind::Spea2, Approach::Scd),
        (EngineKind::Moead, Approach::Ssc),
        (EngineKind::Nsga2, Approach::Canonical),
    ] {
        let mut cfg = ExperimentConfig {
            dataset: DatasetConfig { path: data.clone(), ..DatasetConfig::default() },
            engine,
            semantic: SemanticConfig::with_approach(approach),
            gp: GpParams { pop_size: 40, generations: 8, ..GpParams::default() },
            split_fraction: Some(0.7),
            seeds: vec![0, 1, 2],
            ..ExperimentConfig::default()
        };
        let mut outputs = Vec::new();
        for (label, workers) in [("serial", 1), ("again", 1), ("parallel", 0)] {
            let out = dir.path().join(format!("{engine}-{approach}-{label}"));
            cfg.out_dir = Some(out.clone());
            harness::run_experiment(&cfg, RunOptions { workers, write: true }).map_err(|e| e.to_string())?;
            let mut names: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
            names.sort();
            let contents: Vec<_> = names.iter().map(|n| (n.clone(), fs::read(out.join(n)).unwrap())).collect();
            outputs.push(contents);
        }
        check(outputs[0] == outputs[1], format!("{engine}/{approach}: reruns differ"))?;
        check(outputs[0] == outputs[2], format!("{engine}/{approach}: parallel run differs"))?;
        files += outputs[0].len();
    }
    Ok(format!("{files} files identical across serial, repeated and parallel runs"))
}

/// MOEA/D ideal point never increases; Tchebycheff hand values.
fn moead_sanity() -> Outcome {
    check(tchebycheff(&[0.4, 0.6], &[0.5, 0.5], &[0.0, 0.0]) == 0.3, "max(0.2, 0.3) ≠ 0.3")?;
    check(tchebycheff(&[0.4, 0.6], &[1.0, 0.0], &[0.0, 0.0]) == 0.4, "max(0.4, 0) ≠ 0.4")?;
    check(tchebycheff(&[0.3, 0.7], &[0.5, 0.5], &[0.3, 0.7]) == 0.0, "point at ideal ≠ 0")?;
    check(tchebycheff(&[0.5, 0.75], &[0.25, 0.75], &[0.25, 0.25]) == 0.375, "max(0.0625, 0.375) ≠ 0.375")?;
    let problem = synthetic_problem(200, 0);
    let gp = GpParams { pop_size: 50, generations: 15, ..GpParams::default() };
    let params = EngineParams::default();
    let mut checked = 0;
    for seed in 0..5 {
        for approach in [Approach::Canonical, Approach::Sdo] {
            let hooks = SemanticMechanism::new(SemanticConfig::with_approach(approach), &problem);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let engine = Moead::new(&problem, &gp, &params.moead, hooks, &mut rng).map_err(|e| e.to_string())?;
            let mut previous: Option<Vec<f64>> = None;
            let mut violation = None;
            emo::drive(engine, gp.generations, UniqueBy::Objectives, &mut rng, |g, e| {
                let z = e.ideal().to_vec();
                if let Some(p) = &previous {
                    if z.iter().zip(p).any(|(a, b)| a > b) && violation.is_none() {
                        violation = Some(g);
                    }
                }
                previous = Some(z);
                checked += 1;
            });
            check(violation.is_none(), format!("seed {seed} {approach}: ideal rose at generation {violation:?}"))?;
        }
    }
    Ok(format!("{checked} generations checked; 4 Tchebycheff hand values exact"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("nondominated sort vs peeling oracle", nondominated_sort_oracle),
        ("SPEA2 fitness vs brute force", spea2_fitness_oracle),
        ("hypervolume exact vs Monte Carlo and hand values", hypervolume_oracle),
        ("distance partition identity", distance_partition),
        ("SSC gating", ssc_gating),
        ("canonical regression", canonical_regression),
        ("desk-scale trend (SDO vs canonical NSGA-II)", desk_scale_trend),
        ("SDO invariants", sdo_invariants),
        ("end-to-end determinism", end_to_end_determinism),
        ("MOEA/D sanity", moead_sanity),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
