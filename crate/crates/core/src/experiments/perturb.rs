use serde::{Deserialize, Serialize};

use crate::data::Split;
use crate::error::{Error, Result};
use crate::experiments::artifacts::write_csv_rows;
use crate::experiments::commands::test_rmse;
use crate::experiments::ood::variance_scores;
use crate::experiments::pipeline::{fit_mode, mean, obtain_base, probe_for, row_means, SeedStreams};
use crate::experiments::{ExperimentConfig, RunDir, RunManifest, RunOptions};
use crate::metrics::spearman;

/// One noise level for one fitted model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerturbLevel {
    pub seed: u64,
    pub method: String,
    pub sigma: f64,
    /// Mean of `g(x_σ, f(x_σ))`.
    pub mean_uncertainty: f64,
    /// Mean of `g(x_σ, f(x))`; absent for models that never see `f(x)`.
    pub mean_uncertainty_ablation: Option<f64>,
    pub base_rmse: f64,
}

/// Trend checks over the levels of one (seed, method) pair.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerturbSummary {
    pub seed: u64,
    pub method: String,
    /// Nondecreasing up to one adjacent drop of at most 2% of the value range.
    pub monotone: bool,
    pub spearman: f64,
    pub ablation_spearman: Option<f64>,
    pub rmse_nondecreasing: bool,
}

#[derive(Clone, Debug)]
pub struct PerturbReport {
    pub levels: Vec<PerturbLevel>,
    pub summaries: Vec<PerturbSummary>,
    pub manifest: RunManifest,
}

/// True when `values` never decrease, except for at most `max_drops` adjacent
/// decreases each no larger than `rel_tol` times the range of `values`.
pub fn nondecreasing_within(values: &[f64], max_drops: usize, rel_tol: f64) -> bool {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let allowed = rel_tol * (hi - lo);
    let mut drops = 0;
    for w in values.windows(2) {
        let d = w[0] - w[1];
        if d > 0.0 {
            drops += 1;
            if d > allowed || drops > max_drops {
                return false;
            }
        }
    }
    true
}

/// Evaluates each fitted model on test inputs with additive Gaussian noise of
/// increasing scale, sharing one noise draw across levels.
pub fn run_perturb(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<PerturbReport> {
    let sweep = cfg
        .perturb
        .as_ref()
        .ok_or_else(|| Error::Config("the perturb command needs a `perturb` section".into()))?;
    let mut run = RunDir::create(cfg, "perturb", opts)?;
    let seeds = cfg.run_seeds(opts.seed_offset);
    let mut levels = Vec::new();
    let mut summaries = Vec::new();
    for &seed in &seeds {
        let data = cfg.dataset.load(seed)?;
        let base = obtain_base(cfg, &cfg.dataset, &data, seed, run.root())?;
        let probe = probe_for(&data, &cfg.probe, seed, cfg.posthoc.schedule.batch_size)?;
        let x = data.x(Split::Test);
        let noisy = sweep.apply(&x, &mut SeedStreams::new(seed).evaluation());
        let rmses = noisy
            .iter()
            .map(|xs| test_rmse(&data, &base.model.predict(xs)?))
            .collect::<Result<Vec<_>>>()?;
        for &mode in &cfg.posthoc.modes {
            let (model, _) = fit_mode(cfg, &base, &probe, mode, seed)?;
            let mut full = Vec::new();
            let mut ablation = Vec::new();
            for (xs, (&sigma, &base_rmse)) in noisy.iter().zip(sweep.sigmas.iter().zip(&rmses)) {
                let u = mean(&variance_scores(&model, &data, xs)?);
                let a = if mode.sees_output() {
                    let v = data.target_scaler().inverse_variance(&model.predict_counterfactual(xs, &x)?)?;
                    Some(mean(&row_means(&v)))
                } else {
                    None
                };
                full.push(u);
                ablation.extend(a);
                levels.push(PerturbLevel {
                    seed,
                    method: mode.name().into(),
                    sigma,
                    mean_uncertainty: u,
                    mean_uncertainty_ablation: a,
                    base_rmse,
                });
            }
            let summary = PerturbSummary {
                seed,
                method: mode.name().into(),
                monotone: nondecreasing_within(&full, 1, 0.02),
                spearman: spearman(&sweep.sigmas, &full)?,
                ablation_spearman: if ablation.is_empty() {
                    None
                } else {
                    Some(spearman(&sweep.sigmas, &ablation)?)
                },
                rmse_nondecreasing: nondecreasing_within(&rmses, 0, 0.0),
            };
            log::info!(
                "seed {seed} {}: monotone {} ablation rho {:?}",
                summary.method,
                summary.monotone,
                summary.ablation_spearman
            );
            summaries.push(summary);
        }
    }
    write_csv_rows(&run.artifact("levels.csv")?, &levels)?;
    write_csv_rows(&run.artifact("summary.csv")?, &summaries)?;
    run.write_json("report.json", &serde_json::json!({ "levels": levels, "summaries": summaries }))?;
    let manifest = run.finish(cfg, &seeds)?;
    Ok(PerturbReport {
        levels,
        summaries,
        manifest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trend_tolerance() {
        assert!(nondecreasing_within(&[0.0, 1.0, 2.0, 3.0], 1, 0.02));
        assert!(nondecreasing_within(&[0.0, 1.0, 0.95, 3.0], 1, 0.02));
        assert!(!nondecreasing_within(&[0.0, 1.0, 0.9, 3.0], 1, 0.02));
        assert!(!nondecreasing_within(&[0.0, 1.0, 0.99, 2.0, 1.99, 3.0], 1, 0.02));
        assert!(!nondecreasing_within(&[1.0, 0.999], 0, 0.0));
        assert!(nondecreasing_within(&[1.0, 1.0], 0, 0.0));
    }
}
