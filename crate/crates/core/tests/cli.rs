//! Drives the `uq` binary end to end on small configurations.

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

use common::*;

fn uq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uq"))
        .args(args)
        .env("RUST_LOG", "warn")
        .env("UQ_DATA_DIR", workspace_root())
        .output()
        .expect("uq runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn tiny_config() -> Value {
    json!({
        "name": "tiny",
        "dataset": {"kind": "toy", "n_train": 300, "n_test": 100},
        "base": {
            "hidden": [16, 16],
            "schedule": {"max_epochs": 20, "batch_size": 32, "early_stop_patience": 5},
            "optimizer": {"lr": 0.003}
        },
        "posthoc": {
            "hidden": [8, 8],
            "schedule": {"max_epochs": 20, "batch_size": 32, "early_stop_patience": 5},
            "optimizer": {"lr": 0.003, "weight_decay": 0.01}
        },
        "probe": {"fraction": 1.0},
        "seeds": [0, 1]
    })
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

fn run(cmd: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    uq(&args)
}

#[test]
fn print_schema_and_usage_errors() {
    let o = uq(&["--print-schema"]);
    assert_eq!(code(&o), 0);
    let schema: Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in ["dataset", "base", "posthoc", "probe", "seeds"] {
        assert!(schema["properties"].get(key).is_some(), "schema lacks {key}");
    }
    assert_eq!(code(&uq(&[])), 2);
    assert_eq!(code(&uq(&["bogus"])), 2);
    assert_eq!(code(&uq(&["train-base", "--config", "/nonexistent/config.json"])), 2);
}

#[test]
fn missing_csv_exits_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_config();
    cfg["dataset"] = json!({"kind": "csv", "path": "data/does_not_exist.csv", "targets": ["y"]});
    let path = write_config(dir.path(), "c.json", &cfg);
    let o = run("train-base", &path, &dir.path().join("out"), &[]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not found"));
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_config();
    cfg["seeds"] = json!([]);
    let path = write_config(dir.path(), "c.json", &cfg);
    assert_eq!(code(&run("train-base", &path, &dir.path().join("out"), &[])), 2);
    std::fs::write(dir.path().join("bad.json"), "{ not json").unwrap();
    assert_eq!(code(&run("train-base", &dir.path().join("bad.json"), &dir.path().join("out"), &[])), 2);
}

#[test]
fn train_fit_eval_chain_and_force() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path(), "c.json", &tiny_config());
    let out = dir.path().join("out");

    let o = run("train-base", &cfg_path, &out, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let base0 = std::fs::read(out.join("train-base/seed_0/base.json")).unwrap();
    let manifest = read_json(&out.join("train-base/manifest.json"));
    assert_eq!(manifest["seeds"], json!([0, 1]));
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);

    // rerunning without --force refuses, with --force reproduces the same checkpoint
    assert_eq!(code(&run("train-base", &cfg_path, &out, &[])), 2);
    assert_eq!(code(&run("train-base", &cfg_path, &out, &["--force"])), 0);
    assert_eq!(std::fs::read(out.join("train-base/seed_0/base.json")).unwrap(), base0);

    let o = run("fit-posthoc", &cfg_path, &out, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    // fit-posthoc picked up the trained base
    assert_eq!(std::fs::read(out.join("fit-posthoc/seed_0/base.json")).unwrap(), base0);
    for mode in ["input_only", "output_only", "hybrid"] {
        assert!(out.join(format!("fit-posthoc/seed_1/posthoc_{mode}.json")).exists());
    }
    let fitted = read_json(&out.join("fit-posthoc/report.json"));

    let o = run("eval", &cfg_path, &out, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let evaluated = read_json(&out.join("eval/report.json"));
    let nll = |v: &Value| -> Vec<f64> {
        v.as_array().unwrap().iter().map(|e| e["metrics"]["nll"].as_f64().unwrap()).collect()
    };
    assert_eq!(nll(&fitted).len(), 6);
    assert_eq!(nll(&fitted), nll(&evaluated));

    // the report carries every documented metrics field
    let schema = schemars::schema_for!(iocue::metrics::MetricsReport);
    let schema = serde_json::to_value(schema).unwrap();
    let first = &evaluated[0]["metrics"];
    for key in schema["properties"].as_object().unwrap().keys() {
        assert!(first.get(key).is_some(), "metrics lack {key}");
    }
    for key in schema["required"].as_array().unwrap() {
        assert!(!first[key.as_str().unwrap()].is_null());
    }
}

#[test]
fn seed_offset_shifts_every_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_config();
    cfg["seeds"] = json!([0]);
    let cfg_path = write_config(dir.path(), "c.json", &cfg);
    let out = dir.path().join("out");
    assert_eq!(code(&run("train-base", &cfg_path, &out, &["--seed-offset", "5"])), 0);
    assert!(out.join("train-base/seed_5/base.json").exists());
    assert_eq!(read_json(&out.join("train-base/manifest.json"))["seeds"], json!([5]));
}

#[test]
fn perturb_reports_a_clean_level_and_trend_column() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_config();
    cfg["seeds"] = json!([0]);
    cfg["posthoc"]["modes"] = json!(["hybrid"]);
    cfg["perturb"] = json!({"sigmas": [0.0, 0.1, 0.5]});
    let cfg_path = write_config(dir.path(), "c.json", &cfg);
    let out = dir.path().join("out");
    let o = run("perturb", &cfg_path, &out, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&out.join("perturb/report.json"));
    let levels = report["levels"].as_array().unwrap();
    assert_eq!(levels.len(), 3);
    // σ = 0 matches the clean evaluation, so both sources agree there
    let clean = &levels[0];
    assert_eq!(clean["sigma"], json!(0.0));
    assert_eq!(clean["mean_uncertainty"], clean["mean_uncertainty_ablation"]);
    let summary = &report["summaries"][0];
    assert!(summary["monotone"].is_boolean());
    assert!(summary["rmse_nondecreasing"].is_boolean());
}

#[test]
fn probe_sweep_uses_equal_budgets() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_config();
    cfg["seeds"] = json!([0]);
    cfg["posthoc"]["modes"] = json!(["hybrid"]);
    cfg["posthoc"]["budget"] = json!({"steps": 40});
    cfg["sweep"] = json!({"axis": "probe_fraction", "values": [0.2, 0.5, 1.0]});
    let cfg_path = write_config(dir.path(), "c.json", &cfg);
    let out = dir.path().join("out");
    let o = run("sweep", &cfg_path, &out, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut cells = Vec::new();
    for v in ["0.2", "0.5", "1"] {
        let c = read_json(&out.join(format!("sweep/cell_{v}.json")));
        cells.extend(c.as_array().unwrap().clone());
    }
    assert_eq!(cells.len(), 3);
    assert!(cells.iter().all(|c| c["steps"] == json!(40)));
    let rows: Vec<u64> = cells.iter().map(|c| c["probe_rows"].as_u64().unwrap()).collect();
    assert!(rows[0] < rows[1] && rows[1] < rows[2]);
    let summary = std::fs::read_to_string(out.join("sweep/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
}

#[test]
fn suite_records_per_cell_failures() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_config();
    cfg["seeds"] = json!([0]);
    cfg["posthoc"]["modes"] = json!(["hybrid"]);
    cfg["ensemble"] = json!({"members": 2});
    cfg["suite"] = json!([
        {"kind": "csv", "name": "wine_red", "path": "data/wine_red.csv", "targets": ["quality"]},
        {"kind": "csv", "name": "missing", "path": "data/missing.csv", "targets": ["y"]}
    ]);
    let cfg_path = write_config(dir.path(), "c.json", &cfg);
    let out = dir.path().join("out");
    let o = run("uci-suite", &cfg_path, &out, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&out.join("uci-suite/report.json"));
    let cells = report["cells"].as_array().unwrap();
    let failed: Vec<&Value> = cells.iter().filter(|c| !c["error"].is_null()).collect();
    assert_eq!(failed.len(), 2);
    assert!(failed.iter().all(|c| c["dataset"] == json!("missing")));
    assert!(cells.iter().any(|c| c["dataset"] == json!("wine_red") && c["nll"].is_f64()));
    let table = std::fs::read_to_string(out.join("uci-suite/table.txt")).unwrap();
    assert!(table.contains("NLL") && table.contains("ECE") && table.contains("failed"));
}

#[test]
fn crossnet_matrix_is_complete_and_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_config();
    cfg["seeds"] = json!([0]);
    cfg["posthoc"]["modes"] = json!(["hybrid"]);
    cfg["crossnet"] = json!({"augmentations": [
        {"kind": "gauss_noise", "sigma": 0.5, "probability": 0.5},
        {"kind": "sign_flip", "probability": 0.5}
    ]});
    let cfg_path = write_config(dir.path(), "c.json", &cfg);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run("crossnet", &cfg_path, out, &[]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ra = read_json(&a.join("crossnet/report.json"));
    let rb = read_json(&b.join("crossnet/report.json"));
    assert_eq!(ra["cells"].as_array().unwrap().len(), 4);
    assert_eq!(ra["cells"], rb["cells"]);
}

#[test]
fn toy_smoke_run_is_quick() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_config();
    cfg["dataset"] = json!({"kind": "toy", "n_train": 2000});
    cfg["base"]["hidden"] = json!([100, 100, 100]);
    cfg["base"]["schedule"] = json!({"max_epochs": 50, "batch_size": 128, "early_stop_patience": 50});
    cfg["seeds"] = json!([0]);
    let cfg_path = write_config(dir.path(), "c.json", &cfg);
    let started = std::time::Instant::now();
    assert_eq!(code(&run("train-base", &cfg_path, &dir.path().join("out"), &[])), 0);
    assert!(started.elapsed().as_secs() < 60);
}
