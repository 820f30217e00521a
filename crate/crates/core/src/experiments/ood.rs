use serde::{Deserialize, Serialize};

use crate::data::{augment, AugmentationSpec, DatasetTable, ProbeConfig, Split};
use crate::error::{Error, Result};
use crate::experiments::artifacts::write_csv_rows;
use crate::experiments::pipeline::{
    ensemble_predictive, fit_mode, mean, obtain_base, probe_for, row_means, seed_dir, train_ensemble_run, SeedStreams,
};
use crate::experiments::{ExperimentConfig, OodSource, RunDir, RunManifest, RunOptions};
use crate::metrics::{auroc, roc_curve};
use crate::numerics::{Matrix, Rng};
use crate::posthoc::{epistemic_diagnostics, PosthocModel};

/// AUROC and variance levels for one (seed, mode, probe) cell.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OodCell {
    pub seed: u64,
    pub method: String,
    /// `plain` or `augmented`.
    pub probe: String,
    pub auroc: f64,
    pub id_mean_variance: f64,
    pub ood_mean_variance: f64,
    /// Slope of excess variance on output-box distance, for models that see `f(x)`.
    pub lambda: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct OodReport {
    pub cells: Vec<OodCell>,
    pub manifest: RunManifest,
}

impl OodReport {
    pub fn cell(&self, seed: u64, method: &str, probe: &str) -> Option<&OodCell> {
        self.cells.iter().find(|c| c.seed == seed && c.method == method && c.probe == probe)
    }
}

/// Every augmentation applied to every row.
fn always(augs: &[AugmentationSpec]) -> Vec<AugmentationSpec> {
    augs.iter().map(|a| AugmentationSpec::new(a.kind.clone(), 1.0)).collect()
}

/// Standardized OOD inputs for one seed.
pub fn ood_inputs(source: &OodSource, cfg: &ExperimentConfig, data: &DatasetTable, rng: &mut Rng) -> Result<Matrix> {
    match source {
        OodSource::ToyFlanks { n, width_fraction } => {
            let toy = cfg
                .dataset
                .toy()
                .ok_or_else(|| Error::Config("toy_flanks OOD needs a toy dataset".into()))?;
            let raw = toy.ood_inputs(*n, *width_fraction, rng);
            data.standardize_features(&Matrix::column_vector(raw))
        }
        OodSource::CorruptedTest { augmentations } => {
            for a in augmentations {
                a.validate(data.input_width())?;
            }
            Ok(augment(&data.x(Split::Test), &always(augmentations), rng))
        }
    }
}

/// Mean predicted variance per row in original target units.
pub fn variance_scores(model: &PosthocModel, data: &DatasetTable, x: &Matrix) -> Result<Vec<f64>> {
    let v = data.target_scaler().inverse_variance(&model.predict_variance(x)?)?;
    Ok(row_means(&v))
}

#[derive(Serialize)]
struct RocRow {
    threshold: f64,
    fpr: f64,
    tpr: f64,
}

/// Scores the ID test split against the OOD set with models fitted on the plain
/// probe and on the probe with the OOD augmentations added.
pub fn run_ood(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<OodReport> {
    let spec = cfg.ood.as_ref().ok_or_else(|| Error::Config("the ood command needs an `ood` section".into()))?;
    let mut run = RunDir::create(cfg, "ood", opts)?;
    let seeds = cfg.run_seeds(opts.seed_offset);
    let mut cells = Vec::new();
    for &seed in &seeds {
        let data = cfg.dataset.load(seed)?;
        let base = obtain_base(cfg, &cfg.dataset, &data, seed, run.root())?;
        let x_id = data.x(Split::Test);
        let x_ood = ood_inputs(&spec.source, cfg, &data, &mut SeedStreams::new(seed).evaluation())?;
        let x_train = data.x(Split::Train);
        let mut augmented = cfg.probe.augmentations.clone();
        augmented.extend(spec.probe_augmentations.iter().cloned());
        let probes = [
            ("plain", cfg.probe.clone()),
            ("augmented", ProbeConfig { augmentations: augmented, ..cfg.probe.clone() }),
        ];
        for (label, probe_cfg) in probes {
            let probe = probe_for(&data, &probe_cfg, seed, cfg.posthoc.schedule.batch_size)?;
            for &mode in &cfg.posthoc.modes {
                let (model, _) = fit_mode(cfg, &base, &probe, mode, seed)?;
                let id = variance_scores(&model, &data, &x_id)?;
                let ood = variance_scores(&model, &data, &x_ood)?;
                let lambda = if mode.sees_output() {
                    Some(epistemic_diagnostics(&model, &x_train, &x_ood)?.lambda_fit)
                } else {
                    None
                };
                let roc: Vec<RocRow> = roc_curve(&id, &ood)?
                    .into_iter()
                    .map(|p| RocRow { threshold: p.threshold, fpr: p.fpr, tpr: p.tpr })
                    .collect();
                write_csv_rows(&run.artifact(seed_dir(seed).join(format!("roc_{}_{label}.csv", mode.name())))?, &roc)?;
                let cell = OodCell {
                    seed,
                    method: mode.name().into(),
                    probe: label.into(),
                    auroc: auroc(&id, &ood)?,
                    id_mean_variance: mean(&id),
                    ood_mean_variance: mean(&ood),
                    lambda,
                };
                log::info!("seed {seed} {} {label}: auroc {:.3}", cell.method, cell.auroc);
                cells.push(cell);
            }
        }
        if let Some(e) = &cfg.ensemble {
            let ens = train_ensemble_run(cfg, &data, e.members, seed)?;
            let (_, id) = ensemble_predictive(&ens, &data, &x_id)?;
            let (_, ood) = ensemble_predictive(&ens, &data, &x_ood)?;
            let k = data.output_width();
            let id = row_means(&Matrix::from_vec(id.len() / k, k, id)?);
            let ood = row_means(&Matrix::from_vec(ood.len() / k, k, ood)?);
            cells.push(OodCell {
                seed,
                method: "ensemble".into(),
                probe: "none".into(),
                auroc: auroc(&id, &ood)?,
                id_mean_variance: mean(&id),
                ood_mean_variance: mean(&ood),
                lambda: None,
            });
        }
    }
    write_csv_rows(&run.artifact("auroc.csv")?, &cells)?;
    run.write_json("report.json", &cells)?;
    let manifest = run.finish(cfg, &seeds)?;
    Ok(OodReport { cells, manifest })
}
