use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::Split;
use crate::error::Result;
use crate::experiments::artifacts::write_csv_rows;
use crate::experiments::commands::evaluate_posthoc;
use crate::experiments::pipeline::{
    ensemble_predictive, fit_mode, mean, obtain_base, probe_for, std_dev, train_ensemble_run,
};
use crate::experiments::{DatasetSpec, ExperimentConfig, RunDir, RunManifest, RunOptions};
use crate::metrics::{evaluate, Scores};

/// Ensemble size used when the config has no `ensemble` section.
pub const DEFAULT_ENSEMBLE_MEMBERS: usize = 5;

/// One (dataset, method, seed) outcome; failures are kept with their message.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteCell {
    pub dataset: String,
    pub method: String,
    pub seed: u64,
    pub nll: Option<f64>,
    pub ece: Option<f64>,
    pub euc: Option<f64>,
    pub rmse: Option<f64>,
    pub error: Option<String>,
}

impl SuiteCell {
    fn ok(dataset: &str, method: &str, seed: u64, s: Scores) -> Self {
        Self {
            dataset: dataset.into(),
            method: method.into(),
            seed,
            nll: Some(s.nll),
            ece: Some(s.ece),
            euc: Some(s.euc),
            rmse: Some(s.rmse),
            error: None,
        }
    }

    fn failed(dataset: &str, method: &str, seed: u64, err: &crate::Error) -> Self {
        Self {
            dataset: dataset.into(),
            method: method.into(),
            seed,
            nll: None,
            ece: None,
            euc: None,
            rmse: None,
            error: Some(err.to_string()),
        }
    }
}

/// Mean ± sample std across the successful seeds of one (dataset, method).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteRow {
    pub dataset: String,
    pub method: String,
    pub seeds: usize,
    pub failures: usize,
    pub nll_mean: f64,
    pub nll_std: f64,
    pub ece_mean: f64,
    pub ece_std: f64,
    pub rmse_mean: f64,
    pub rmse_std: f64,
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub cells: Vec<SuiteCell>,
    pub rows: Vec<SuiteRow>,
    pub table: String,
    pub manifest: RunManifest,
}

impl SuiteReport {
    pub fn row(&self, dataset: &str, method: &str) -> Option<&SuiteRow> {
        self.rows.iter().find(|r| r.dataset == dataset && r.method == method)
    }
}

fn methods(cfg: &ExperimentConfig) -> Vec<String> {
    let mut m = vec!["ensemble".to_string()];
    m.extend(cfg.posthoc.modes.iter().map(|x| x.name().to_string()));
    m
}

fn run_cell_group(cfg: &ExperimentConfig, ds: &DatasetSpec, seed: u64, run: &RunDir, out: &mut Vec<SuiteCell>) {
    let name = ds.name();
    let all_failed = |e: &crate::Error, out: &mut Vec<SuiteCell>| {
        for m in methods(cfg) {
            out.push(SuiteCell::failed(&name, &m, seed, e));
        }
    };
    let data = match ds.load(seed) {
        Ok(d) => d,
        Err(e) => return all_failed(&e, out),
    };
    let x = data.x(Split::Test);
    let y = data.raw_y(Split::Test);
    let members = cfg.ensemble.as_ref().map_or(DEFAULT_ENSEMBLE_MEMBERS, |e| e.members);
    let ens = train_ensemble_run(cfg, &data, members, seed)
        .and_then(|e| ensemble_predictive(&e, &data, &x))
        .and_then(|(p, _)| evaluate(&p, y.as_slice()));
    out.push(match ens {
        Ok(s) => SuiteCell::ok(&name, "ensemble", seed, s),
        Err(e) => SuiteCell::failed(&name, "ensemble", seed, &e),
    });
    let base = match obtain_base(cfg, ds, &data, seed, run.root()) {
        Ok(b) => b,
        Err(e) => {
            for m in &cfg.posthoc.modes {
                out.push(SuiteCell::failed(&name, m.name(), seed, &e));
            }
            return;
        }
    };
    let probe = probe_for(&data, &cfg.probe, seed, cfg.posthoc.schedule.batch_size);
    for &mode in &cfg.posthoc.modes {
        let result = probe
            .as_ref()
            .map_err(|e| crate::Error::Config(e.to_string()))
            .and_then(|p| fit_mode(cfg, &base, p, mode, seed))
            .and_then(|(m, _)| evaluate_posthoc(&m, &data, &cfg.name, seed, None));
        out.push(match result {
            Ok(e) => {
                let scores = Scores {
                    rmse: e.metrics.rmse.unwrap_or(f64::NAN),
                    nll: e.metrics.nll.unwrap_or(f64::NAN),
                    ece: e.metrics.ece.unwrap_or(f64::NAN),
                    euc: e.metrics.euc.unwrap_or(f64::NAN),
                };
                SuiteCell::ok(&name, mode.name(), seed, scores)
            }
            Err(e) => SuiteCell::failed(&name, mode.name(), seed, &e),
        });
    }
}

/// Aggregates cells into one row per (dataset, method), preserving first-seen order.
pub fn aggregate(cells: &[SuiteCell]) -> Vec<SuiteRow> {
    let mut keys: Vec<(String, String)> = Vec::new();
    for c in cells {
        let k = (c.dataset.clone(), c.method.clone());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(dataset, method)| {
            let group: Vec<&SuiteCell> = cells.iter().filter(|c| c.dataset == dataset && c.method == method).collect();
            let ok: Vec<&SuiteCell> = group.iter().copied().filter(|c| c.error.is_none()).collect();
            let col = |f: fn(&SuiteCell) -> Option<f64>| ok.iter().filter_map(|c| f(c)).collect::<Vec<_>>();
            let (nll, ece, rmse) = (col(|c| c.nll), col(|c| c.ece), col(|c| c.rmse));
            SuiteRow {
                seeds: ok.len(),
                failures: group.len() - ok.len(),
                nll_mean: mean(&nll),
                nll_std: std_dev(&nll),
                ece_mean: mean(&ece),
                ece_std: std_dev(&ece),
                rmse_mean: mean(&rmse),
                rmse_std: std_dev(&rmse),
                dataset,
                method,
            }
        })
        .collect()
}

/// Plain-text table: one line per dataset, NLL and ECE (mean ± std) per method.
pub fn render_table(rows: &[SuiteRow]) -> String {
    let mut datasets: Vec<&str> = Vec::new();
    let mut methods: Vec<&str> = Vec::new();
    for r in rows {
        if !datasets.contains(&r.dataset.as_str()) {
            datasets.push(&r.dataset);
        }
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let cell_w = 30;
    let mut out = String::new();
    let _ = write!(out, "{:<12}", "dataset");
    for m in &methods {
        let _ = write!(out, " | {:^cell_w$}", m);
    }
    out.push('\n');
    let _ = write!(out, "{:<12}", "");
    for _ in &methods {
        let _ = write!(out, " | {:^14} {:^15}", "NLL", "ECE");
    }
    out.push('\n');
    out.push_str(&"-".repeat(12 + methods.len() * (cell_w + 3)));
    out.push('\n');
    for d in &datasets {
        let _ = write!(out, "{:<12}", d);
        for m in &methods {
            match rows.iter().find(|r| r.dataset == *d && r.method == *m) {
                Some(r) if r.seeds > 0 => {
                    let _ = write!(
                        out,
                        " | {:>6.3} ± {:<5.3} {:>6.3} ± {:<6.3}",
                        r.nll_mean, r.nll_std, r.ece_mean, r.ece_std
                    );
                }
                _ => {
                    let _ = write!(out, " | {:^cell_w$}", "failed");
                }
            }
        }
        out.push('\n');
    }
    out
}

/// Runs the ensemble and every configured post-hoc mode on every dataset and seed.
pub fn run_uci_suite(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<SuiteReport> {
    let mut run = RunDir::create(cfg, "uci-suite", opts)?;
    let seeds = cfg.run_seeds(opts.seed_offset);
    let mut cells = Vec::new();
    for ds in cfg.datasets() {
        for &seed in &seeds {
            let before = cells.len();
            run_cell_group(cfg, ds, seed, &run, &mut cells);
            for c in &cells[before..] {
                match &c.error {
                    None => log::info!("{} seed {seed} {}: nll {:.4}", c.dataset, c.method, c.nll.unwrap_or(f64::NAN)),
                    Some(e) => log::warn!("{} seed {seed} {}: {e}", c.dataset, c.method),
                }
            }
        }
    }
    let rows = aggregate(&cells);
    let table = render_table(&rows);
    write_csv_rows(&run.artifact("cells.csv")?, &cells)?;
    write_csv_rows(&run.artifact("table.csv")?, &rows)?;
    run.write_text("table.txt", &table)?;
    run.write_json("report.json", &serde_json::json!({ "cells": cells, "rows": rows }))?;
    let manifest = run.finish(cfg, &seeds)?;
    Ok(SuiteReport {
        cells,
        rows,
        table,
        manifest,
    })
}
