use serde::{Deserialize, Serialize};

use crate::data::{ProbeConfig, Split};
use crate::error::{Error, Result};
use crate::experiments::artifacts::write_csv_rows;
use crate::experiments::commands::evaluate_posthoc;
use crate::experiments::ood::{ood_inputs, variance_scores};
use crate::experiments::pipeline::{fit_mode, mean, obtain_base, probe_for, SeedStreams};
use crate::experiments::{ExperimentConfig, PosthocBudget, RunDir, RunManifest, RunOptions, SweepSpec};
use crate::metrics::auroc;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepCell {
    pub axis: String,
    pub value: String,
    pub seed: u64,
    pub method: String,
    pub probe_rows: usize,
    pub steps: u64,
    pub nll: f64,
    pub ece: f64,
    pub euc: f64,
    pub rmse: f64,
    pub auroc: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepSummary {
    pub value: String,
    pub method: String,
    pub seeds: usize,
    pub nll: f64,
    pub ece: f64,
    pub euc: f64,
    pub auroc: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub cells: Vec<SweepCell>,
    pub summaries: Vec<SweepSummary>,
    pub manifest: RunManifest,
}

/// Variant of the experiment for one point on the sweep axis.
struct Variant {
    label: String,
    cfg: ExperimentConfig,
}

fn variants(cfg: &ExperimentConfig, spec: &SweepSpec) -> Result<(String, Vec<Variant>)> {
    Ok(match spec {
        SweepSpec::ProbeFraction { values } => {
            if values.is_empty() {
                return Err(Error::Config("probe_fraction sweep needs values".into()));
            }
            let vs = values
                .iter()
                .map(|&f| Variant {
                    label: format!("{f}"),
                    cfg: ExperimentConfig {
                        probe: ProbeConfig { fraction: f, ..cfg.probe.clone() },
                        ..cfg.clone()
                    },
                })
                .collect();
            ("probe_fraction".into(), vs)
        }
        SweepSpec::ModelWidth { presets } => {
            if presets.is_empty() {
                return Err(Error::Config("model_width sweep needs presets".into()));
            }
            let vs = presets
                .iter()
                .map(|p| {
                    let mut c = cfg.clone();
                    c.posthoc.hidden = p.hidden.clone();
                    Variant { label: p.name.clone(), cfg: c }
                })
                .collect();
            ("model_width".into(), vs)
        }
    })
}

/// Refits and evaluates the configured modes at every point of the sweep axis
/// with the same number of updates per cell.
pub fn run_sweep(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<SweepReport> {
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("the sweep command needs a `sweep` section".into()))?;
    if cfg.posthoc.budget == PosthocBudget::EarlyStopping {
        return Err(Error::Config("sweeps need a fixed update budget, not early_stopping".into()));
    }
    let (axis, variants) = variants(cfg, spec)?;
    for v in &variants {
        v.cfg.validate()?;
    }
    let mut run = RunDir::create(cfg, "sweep", opts)?;
    let seeds = cfg.run_seeds(opts.seed_offset);
    let mut cells = Vec::new();
    for &seed in &seeds {
        let data = cfg.dataset.load(seed)?;
        let base = obtain_base(cfg, &cfg.dataset, &data, seed, run.root())?;
        let x_ood = match &cfg.ood {
            Some(o) => Some(ood_inputs(&o.source, cfg, &data, &mut SeedStreams::new(seed).evaluation())?),
            None => None,
        };
        let x_id = data.x(Split::Test);
        for v in &variants {
            let mut probe_cfg = v.cfg.probe.clone();
            if let Some(o) = &cfg.ood {
                probe_cfg.augmentations.extend(o.probe_augmentations.iter().cloned());
            }
            let probe = probe_for(&data, &probe_cfg, seed, v.cfg.posthoc.schedule.batch_size)?;
            for &mode in &v.cfg.posthoc.modes {
                let (model, trace) = fit_mode(&v.cfg, &base, &probe, mode, seed)?;
                let e = evaluate_posthoc(&model, &data, &cfg.name, seed, Some(trace.total_steps))?;
                let au = match &x_ood {
                    Some(xo) => Some(auroc(&variance_scores(&model, &data, &x_id)?, &variance_scores(&model, &data, xo)?)?),
                    None => None,
                };
                cells.push(SweepCell {
                    axis: axis.clone(),
                    value: v.label.clone(),
                    seed,
                    method: mode.name().into(),
                    probe_rows: probe.table.count(Split::Train),
                    steps: trace.total_steps,
                    nll: e.metrics.nll.unwrap_or(f64::NAN),
                    ece: e.metrics.ece.unwrap_or(f64::NAN),
                    euc: e.metrics.euc.unwrap_or(f64::NAN),
                    rmse: e.metrics.rmse.unwrap_or(f64::NAN),
                    auroc: au,
                });
            }
        }
    }
    let mut summaries = Vec::new();
    for v in &variants {
        let of_value: Vec<SweepCell> = cells.iter().filter(|c| c.value == v.label).cloned().collect();
        run.write_json(format!("cell_{}.json", v.label), &of_value)?;
        for &mode in &cfg.posthoc.modes {
            let group: Vec<&SweepCell> = of_value.iter().filter(|c| c.method == mode.name()).collect();
            let col = |f: fn(&SweepCell) -> f64| mean(&group.iter().map(|c| f(c)).collect::<Vec<_>>());
            let aurocs: Vec<f64> = group.iter().filter_map(|c| c.auroc).collect();
            summaries.push(SweepSummary {
                value: v.label.clone(),
                method: mode.name().into(),
                seeds: group.len(),
                nll: col(|c| c.nll),
                ece: col(|c| c.ece),
                euc: col(|c| c.euc),
                auroc: if aurocs.is_empty() { None } else { Some(mean(&aurocs)) },
            });
        }
    }
    write_csv_rows(&run.artifact("cells.csv")?, &cells)?;
    write_csv_rows(&run.artifact("summary.csv")?, &summaries)?;
    let manifest = run.finish(cfg, &seeds)?;
    Ok(SweepReport {
        cells,
        summaries,
        manifest,
    })
}
