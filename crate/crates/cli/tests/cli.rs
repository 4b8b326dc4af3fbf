use std::path::Path;
use std::process::{Command, Output};

use serde_json::json;

fn alterego(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_alterego"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Small market and cohort that run in seconds.
fn small_config(dir: &Path, strategies: serde_json::Value) -> std::path::PathBuf {
    let cfg = json!({
        "out": dir.join("out"),
        "market": {
            "n_assets": 8, "n_etfs": 2, "n_benchmarks": 1,
            "n_days": 252 * 10, "start": "1995-01-02"
        },
        "cohort": {
            "n_investors": 30, "start": "1999-01", "end": "2004-06",
            "entry_window_months": 6
        },
        "forecast": {"window_months": 60, "step_months": 24},
        "strategies": strategies,
        "benchmarks": ["BM0"],
        "bootstrap": {"reps": 200},
        "quantile_taus": [0.5]
    });
    let path = dir.join("config.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    path
}

#[test]
fn invalid_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"gamma": -1.0}"#).unwrap();
    let o = alterego(&["--config", path.to_str().unwrap(), "generate"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("gamma"), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"gama": 2.0}"#).unwrap();
    let o = alterego(&["--config", path.to_str().unwrap(), "generate"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("gama"), "{}", stderr(&o));
}

#[test]
fn empty_strategy_list_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), json!([]));
    let o = alterego(&["--config", cfg.to_str().unwrap(), "generate"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("strategies"), "{}", stderr(&o));
}

#[test]
fn missing_predictor_file_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), json!(["EW"]));
    let c = cfg.to_str().unwrap();
    assert!(alterego(&["--config", c, "generate"]).status.success());
    let predictors = dir.path().join("out/data/predictors.csv");
    std::fs::remove_file(&predictors).unwrap();
    let o = alterego(&["--config", c, "train"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("predictors.csv"), "{}", stderr(&o));
}

#[test]
fn equal_weight_runs_without_forecasts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), json!(["EW"]));
    let c = cfg.to_str().unwrap();
    for stage in ["generate", "backtest", "report"] {
        let o = alterego(&["--config", c, stage]);
        assert!(o.status.success(), "{stage}: {}", stderr(&o));
    }
    let out = dir.path().join("out");
    assert!(!out.join("forecast").exists());
    let tracks = std::fs::read_to_string(out.join("backtest/all/tracks.csv")).unwrap();
    assert!(tracks.lines().count() > 1);
    assert!(tracks.lines().skip(1).all(|l| l.contains("EW/quarterly")));
    assert!(out.join("report/spread_summary.csv").exists());
    for stage in ["generate", "backtest", "report"] {
        assert!(out.join(format!("manifests/{stage}.json")).exists());
    }
}

#[test]
fn forecast_strategy_without_forecasts_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), json!(["MV_ML_RollVar"]));
    let c = cfg.to_str().unwrap();
    assert!(alterego(&["--config", c, "generate"]).status.success());
    let o = alterego(&["--config", c, "backtest"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("forecasts.csv"), "{}", stderr(&o));
}

fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn flags_override_config_and_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), json!(["EW", "MV_RollMean_RollVar", "MV_ML_RollVar"]));
    let c = cfg.to_str().unwrap();
    let mut trees = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "2")] {
        let out = dir.path().join(name);
        let o = alterego(&["--config", c, "--out", out.to_str().unwrap(), "--threads", threads, "--seed", "11", "all"]);
        assert!(o.status.success(), "{}", stderr(&o));
        let manifest = std::fs::read_to_string(out.join("manifests/report.json")).unwrap();
        assert!(manifest.contains("\"seed\": 11"), "{manifest}");
        trees.push(tree(&out).into_iter().filter(|(p, _)| !p.starts_with("manifests")).collect::<Vec<_>>());
    }
    assert!(!dir.path().join("out").exists());
    assert_eq!(trees[0].len(), trees[1].len());
    for (x, y) in trees[0].iter().zip(&trees[1]) {
        assert_eq!(x.0, y.0);
        assert!(x.1 == y.1, "{} differs between thread counts", x.0);
    }
}
