//! Per-seed building blocks shared by the commands.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::base::{mean_updates, train_base, BaseCheckpoint, BaseModel};
use crate::baselines::{train_ensemble, EnsembleModel};
use crate::data::{make_probe, DatasetTable, Probe, ProbeConfig, Split};
use crate::distributions::{GaussianPrediction, GenGaussianPrediction, PredictiveDistribution};
use crate::error::{Error, Result};
use crate::experiments::{DatasetSpec, ExperimentConfig};
use crate::metrics::{evaluate, mean_nll, pearson, Scores};
use crate::nn::{read_json, sha256_hex, write_atomic, TrainTrace};
use crate::numerics::{Matrix, Rng, Stream};
use crate::posthoc::{fit_posthoc, ConditioningMode, HeadOutput, PosthocModel};

/// Independent random streams for one run seed.
#[derive(Clone, Debug)]
pub struct SeedStreams {
    root: Rng,
}

impl SeedStreams {
    pub fn new(seed: u64) -> Self {
        Self { root: Rng::new(seed) }
    }

    pub fn base(&self) -> Rng {
        self.root.fork(Stream::Custom(1))
    }

    pub fn posthoc(&self) -> Rng {
        self.root.fork(Stream::Custom(2))
    }

    pub fn ensemble(&self) -> Rng {
        self.root.fork(Stream::Custom(3))
    }

    /// Evaluation-time sampling: OOD sets, corruptions, perturbation noise.
    pub fn evaluation(&self) -> Rng {
        self.root.fork(Stream::Custom(4))
    }

    pub fn crossnet_base(&self, b: usize) -> Rng {
        self.root.fork(Stream::Custom(100 + b as u64))
    }
}

pub fn seed_dir(seed: u64) -> PathBuf {
    PathBuf::from(format!("seed_{seed}"))
}

/// A trained base together with what the budget rule and reports need.
#[derive(Clone, Debug)]
pub struct BaseRun {
    pub model: BaseModel,
    pub member_seeds: Vec<u64>,
    /// Mean optimizer updates per member.
    pub updates: u64,
    pub traces: Vec<TrainTrace>,
}

/// On-disk base record: the checkpoint plus the key of the settings that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseRecord {
    pub key: String,
    pub updates: u64,
    pub member_seeds: Vec<u64>,
    pub checkpoint: BaseCheckpoint,
}

/// Identifies the dataset, base settings and seed a base was trained with.
pub fn base_key(dataset: &DatasetSpec, cfg: &ExperimentConfig, seed: u64) -> String {
    let v = serde_json::json!({ "dataset": dataset, "base": cfg.base, "seed": seed });
    sha256_hex(v.to_string().as_bytes())
}

pub fn train_base_run(cfg: &ExperimentConfig, data: &DatasetTable, seed: u64) -> Result<BaseRun> {
    let mlp = cfg.base.mlp(data.input_width(), data.output_width());
    let (model, traces, member_seeds) = train_base(
        data,
        &mlp,
        cfg.base.members,
        &[],
        &cfg.base.schedule,
        &cfg.base.optimizer,
        &SeedStreams::new(seed).base(),
    )?;
    Ok(BaseRun {
        model,
        member_seeds,
        updates: mean_updates(&traces),
        traces,
    })
}

impl BaseRun {
    pub fn record(&self, key: String, data: &DatasetTable) -> BaseRecord {
        BaseRecord {
            key,
            updates: self.updates,
            member_seeds: self.member_seeds.clone(),
            checkpoint: self.model.to_checkpoint(&self.member_seeds, data),
        }
    }

    /// Writes `base.json` and one training trace per member into `dir`.
    pub fn save(&self, dir: &Path, key: String, data: &DatasetTable) -> Result<Vec<PathBuf>> {
        let mut paths = vec![dir.join("base.json")];
        write_atomic(&paths[0], serde_json::to_string(&self.record(key, data))?.as_bytes())?;
        for (i, t) in self.traces.iter().enumerate() {
            let p = dir.join(format!("base_trace_{i}.csv"));
            t.write_csv(&p)?;
            paths.push(p);
        }
        Ok(paths)
    }
}

/// Loads a base record, checking it was produced for `key`.
pub fn load_base(path: &Path, key: &str) -> Result<BaseRun> {
    let rec: BaseRecord = read_json(path)?;
    if rec.key != key {
        return Err(Error::Config(format!("{} was trained with different settings", path.display())));
    }
    Ok(BaseRun {
        model: rec.checkpoint.to_model()?,
        member_seeds: rec.member_seeds,
        updates: rec.updates,
        traces: Vec::new(),
    })
}

/// Reuses the base left by `train-base` under `root` when it matches, otherwise trains one.
pub fn obtain_base(cfg: &ExperimentConfig, dataset: &DatasetSpec, data: &DatasetTable, seed: u64, root: &Path) -> Result<BaseRun> {
    let key = base_key(dataset, cfg, seed);
    let stored = root.join("train-base").join(seed_dir(seed)).join("base.json");
    if stored.exists() {
        match load_base(&stored, &key) {
            Ok(run) => {
                log::info!("reusing base {}", stored.display());
                return Ok(run);
            }
            Err(e) => log::warn!("{e}; training a fresh base"),
        }
    }
    train_base_run(cfg, data, seed)
}

/// Probe for one run seed; the configured probe seed is offset by the run seed.
pub fn probe_for(data: &DatasetTable, probe: &ProbeConfig, seed: u64, batch_size: usize) -> Result<Probe> {
    let cfg = ProbeConfig {
        seed: probe.seed.wrapping_add(seed),
        ..probe.clone()
    };
    make_probe(data, &cfg, batch_size)
}

/// Fits one auxiliary network with the configured budget.
pub fn fit_mode(
    cfg: &ExperimentConfig,
    base: &BaseRun,
    probe: &Probe,
    mode: ConditioningMode,
    seed: u64,
) -> Result<(PosthocModel, TrainTrace)> {
    let sched = cfg.posthoc.schedule_for(base.updates);
    fit_posthoc(
        &base.model,
        probe,
        &cfg.posthoc.aux(mode),
        &sched,
        &cfg.posthoc.optimizer,
        &SeedStreams::new(seed).posthoc(),
    )
}

pub fn train_ensemble_run(cfg: &ExperimentConfig, data: &DatasetTable, members: usize, seed: u64) -> Result<EnsembleModel> {
    let template = cfg.base.mlp(data.input_width(), data.output_width());
    let (model, _) = train_ensemble(
        data,
        &template,
        members,
        &cfg.base.schedule,
        &cfg.base.optimizer,
        &SeedStreams::new(seed).ensemble(),
    )?;
    Ok(model)
}

/// Predictive distributions in original target units, flattened row-major.
#[derive(Clone, Debug)]
pub enum Predictive {
    Gaussian(Vec<GaussianPrediction>),
    Gengauss(Vec<GenGaussianPrediction>),
}

impl Predictive {
    pub fn scores(&self, targets: &[f64]) -> Result<Scores> {
        match self {
            Predictive::Gaussian(p) => evaluate(p, targets),
            Predictive::Gengauss(p) => evaluate(p, targets),
        }
    }

    pub fn variances(&self) -> Vec<f64> {
        match self {
            Predictive::Gaussian(p) => p.iter().map(|d| d.variance()).collect(),
            Predictive::Gengauss(p) => p.iter().map(|d| d.variance()).collect(),
        }
    }
}

pub fn posthoc_predictive(model: &PosthocModel, data: &DatasetTable, x: &Matrix) -> Result<Predictive> {
    let scaler = data.target_scaler();
    let mean = scaler.inverse(&model.predict_mean(x)?)?;
    let mu = mean.as_slice();
    Ok(match model.predict_head(x)?.destandardize(&scaler.std) {
        HeadOutput::Gaussian { variance } => Predictive::Gaussian(
            mu.iter().zip(variance.as_slice()).map(|(&m, &v)| GaussianPrediction::new(m, v)).collect(),
        ),
        HeadOutput::Gengauss { alpha, beta } => Predictive::Gengauss(
            mu.iter()
                .zip(alpha.as_slice().iter().zip(beta.as_slice()))
                .map(|(&m, (&a, &b))| GenGaussianPrediction::new(m, a, b))
                .collect(),
        ),
    })
}

/// Ensemble predictive in original units and its epistemic term per entry.
pub fn ensemble_predictive(model: &EnsembleModel, data: &DatasetTable, x: &Matrix) -> Result<(Vec<GaussianPrediction>, Vec<f64>)> {
    let scaler = data.target_scaler();
    let p = model.predict(x)?;
    let mean = scaler.inverse(&p.mean)?;
    let var = scaler.inverse_variance(&p.variance())?;
    let epi = scaler.inverse_variance(&p.epistemic)?;
    let preds = mean
        .as_slice()
        .iter()
        .zip(var.as_slice())
        .map(|(&m, &v)| GaussianPrediction::new(m, v))
        .collect();
    Ok((preds, epi.as_slice().to_vec()))
}

/// Agreement with the generating noise on synthetic test rows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthComparison {
    /// Pearson correlation of predicted variance with the true σ²(x).
    pub variance_pearson: f64,
    /// NLL of the test targets under the true (μ, σ).
    pub oracle_nll: f64,
}

pub fn truth_comparison(data: &DatasetTable, variances: &[f64]) -> Result<Option<TruthComparison>> {
    let Some(truth) = data.truth(Split::Test) else {
        return Ok(None);
    };
    if data.output_width() != 1 {
        return Ok(None);
    }
    let sigma2: Vec<f64> = truth.sigma.iter().map(|s| s * s).collect();
    let oracle: Vec<GaussianPrediction> = truth
        .mean
        .iter()
        .zip(&sigma2)
        .map(|(&m, &v)| GaussianPrediction::new(m, v))
        .collect();
    Ok(Some(TruthComparison {
        variance_pearson: pearson(variances, &sigma2)?,
        oracle_nll: mean_nll(&oracle, data.raw_y(Split::Test).as_slice())?,
    }))
}

/// Row means of a matrix.
pub fn row_means(m: &Matrix) -> Vec<f64> {
    (0..m.rows()).map(|r| m.row(r).iter().sum::<f64>() / m.cols() as f64).collect()
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; 0 for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}
