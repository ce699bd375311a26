use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::json;

fn mfd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfd")).args(args).output().expect("spawn mfd")
}

fn ok(out: Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

/// Small region, tiny dataset and schedule so the whole chain runs in seconds.
fn tiny_config(dir: &Path) -> String {
    let cfg = json!({
        "radar": { "r_min_m": 30000.0, "r_max_m": 36000.0, "az_min_deg": -6.0, "az_max_deg": 6.0 },
        "dataset": { "n_graphs": 6, "snr_db": [9.0, 12.0] },
        "hyper": { "epochs": 2, "batch_size": 2, "lr_step": 1 },
        "calibration": { "pfa2": 0.05, "false_track_trials": 20, "kappa_trials": 20 },
        "mc": { "snr_db": [12.0], "windows": [1, 2], "n_runs": 2 },
        "seed": 5
    });
    let path = dir.join("config.json");
    fs::write(&path, cfg.to_string()).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        ok(mfd(&["simulate", "--config", &cfg, "--seed", "11", "--count", "3", "--out", out.to_str().unwrap()]));
    }
    for k in 0..3 {
        let name = format!("window-{k:05}.json");
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap());
    }
}

#[test]
fn missing_required_argument_exits_2() {
    let out = mfd(&["train", "--out", "x.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"radar": {"bogus": 1}}"#).unwrap();
    let out = mfd(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_config_value_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"graph": {"q": 9}}"#).unwrap();
    let out = mfd(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_artifact_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = mfd(&["train", "--data", dir.path().join("nope").to_str().unwrap(), "--out", "x.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn full_chain_produces_reports() {
    let dir = tempfile::tempdir().unwrap();
    let p = |s: &str| dir.path().join(s).to_str().unwrap().to_owned();
    let cfg = tiny_config(dir.path());
    ok(mfd(&["simulate", "--config", &cfg, "--count", "4", "--out", &p("windows")]));
    ok(mfd(&["build-graphs", "--config", &cfg, "--data", &p("windows"), "--out", &p("from_windows")]));
    assert!(dir.path().join("from_windows/graphs.json").exists());
    ok(mfd(&["build-graphs", "--config", &cfg, "--out", &p("data")]));
    ok(mfd(&["train", "--config", &cfg, "--data", &p("data"), "--out", &p("model.json")]));
    assert!(dir.path().join("model.loss.csv").exists());
    ok(mfd(&["calibrate", "--config", &cfg, "--checkpoint", &p("model.json"), "--out", &p("cal.json")]));
    ok(mfd(&[
        "eval", "--config", &cfg, "--checkpoint", &p("model.json"), "--calibration", &p("cal.json"), "--out", &p("eval"),
    ]));
    ok(mfd(&[
        "importance", "--config", &cfg, "--checkpoint", &p("model.json"), "--data", &p("data"), "--feature", "snr,stc",
        "--repeats", "2", "--out", &p("imp"),
    ]));
    let box_csv = fs::read_to_string(dir.path().join("imp/boxplot.csv")).unwrap();
    assert_eq!(box_csv.lines().count(), 1 + 2 * 3);
    ok(mfd(&["report", "--out", &p("merged.csv"), &p("eval/report.json"), &p("eval/report.json")]));
    let merged = fs::read_to_string(dir.path().join("merged.csv")).unwrap();
    let curves = fs::read_to_string(dir.path().join("eval/curves.csv")).unwrap();
    // Duplicate inputs collapse to one row per (snr, windows, method).
    assert_eq!(merged.lines().count(), curves.lines().count());
    assert!(merged.starts_with("snr_db,windows,method,pd"));
    assert!(merged.contains("GLP") && merged.contains("GATED_NCI") && merged.contains("UPB"));
}
