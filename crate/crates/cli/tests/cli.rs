use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn semogp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semogp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, extra: &str) -> String {
    let out = semogp(&["gen-synth", "--out", dir.join("synth.csv").to_str().unwrap(), "--n", "120", "--seed", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cfg = format!(
        r#"{{"dataset": {{"path": "synth.csv", "positive_label": "pos"}},
            "gp": {{"pop_size": 16, "generations": 4}},
            "seeds": [1, 2]{extra}}}"#
    );
    let path = dir.join("config.json");
    fs::write(&path, cfg).unwrap();
    path.to_str().unwrap().to_owned()
}

fn json_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".json"))
        .collect();
    names.sort();
    names
}

#[test]
fn gen_synth_writes_requested_shape() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let out = semogp(&["gen-synth", "--out", path.to_str().unwrap(), "--n", "50", "--imbalance", "4"]);
    assert!(out.status.success());
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x0,x1,label");
    assert_eq!(lines.len(), 51);
    assert_eq!(lines.iter().filter(|l| l.ends_with(",pos")).count(), 10);
}

#[test]
fn run_then_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out_dir = dir.path().join("out");
    let out = semogp(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--approach", "sdo"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        json_files(&out_dir),
        vec![
            "nsga2-sdo-l0.01-u0.5-band-seed1.json".to_string(),
            "nsga2-sdo-l0.01-u0.5-band-seed2.json".to_string()
        ]
    );
    let csv = fs::read_to_string(out_dir.join("nsga2-sdo-l0.01-u0.5-band-seed1_generations.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("generation,hypervolume,unique_count,mean_nodes,front_size"));
    assert_eq!(csv.lines().count(), 5);

    let result: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("nsga2-sdo-l0.01-u0.5-band-seed1.json")).unwrap()).unwrap();
    assert_eq!(result["seed"], 1);
    assert_eq!(result["config"]["seeds"], serde_json::json!([1]));
    for m in result["front"].as_array().unwrap() {
        assert_eq!(m["objectives"].as_array().unwrap().len(), 2);
    }

    let out = semogp(&["summarize", "--in", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("nsga2/sdo lbss=0.01 ubss=0.5 band"), "{table}");

    let out = semogp(&["summarize", "--in", out_dir.to_str().unwrap(), "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["groups"][0]["runs"], 2);
}

#[test]
fn bounds_sweep_skips_inverted_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#", "engine": "spea2", "semantic": {"approach": "ssc"}"#);
    let out_dir = dir.path().join("sweep");
    let out = semogp(&[
        "run", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--seed", "7", "--lbss", "0.01,0.6", "--ubss", "0.5",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json_files(&out_dir), vec!["spea2-ssc-l0.01-u0.5-band-seed7.json".to_string()]);
}

#[test]
fn errors_exit_nonzero_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#", "engine": "moead", "semantic": {"approach": "scd"}"#);
    let out = semogp(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("scd is not defined for moead"));

    let out = semogp(&["run", "--config", &cfg]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no output directory"));

    let out = semogp(&["summarize", "--in", dir.path().join("missing").to_str().unwrap()]);
    assert!(!out.status.success());

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"engin": "nsga2"}"#).unwrap();
    let out = semogp(&["run", "--config", bad.to_str().unwrap(), "--out", "x"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown field"));
}
