use serde::{Deserialize, Serialize};

use crate::data::{DatasetTable, Split};
use crate::error::Result;
use crate::experiments::pipeline::{
    base_key, fit_mode, load_base, obtain_base, posthoc_predictive, probe_for, seed_dir, train_base_run, truth_comparison,
    TruthComparison,
};
use crate::experiments::{ExperimentConfig, RunDir, RunManifest, RunOptions};
use crate::metrics::{append_csv, rmse, MetricsReport};
use crate::nn::read_json;
use crate::posthoc::{ConditioningMode, HeadKind, PosthocCheckpoint, PosthocModel};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BaseSummary {
    pub seed: u64,
    pub hash: String,
    pub member_seeds: Vec<u64>,
    pub updates: u64,
    /// Test RMSE in original target units.
    pub test_rmse: f64,
}

#[derive(Clone, Debug)]
pub struct TrainBaseReport {
    pub bases: Vec<BaseSummary>,
    pub manifest: RunManifest,
}

/// Test-split evaluation of one post-hoc model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PosthocEvaluation {
    pub seed: u64,
    pub mode: ConditioningMode,
    pub head: HeadKind,
    pub steps: Option<u64>,
    pub metrics: MetricsReport,
    /// Only for synthetic data with known noise.
    pub truth: Option<TruthComparison>,
}

#[derive(Clone, Debug)]
pub struct PosthocReport {
    pub evaluations: Vec<PosthocEvaluation>,
    pub manifest: RunManifest,
}

impl PosthocReport {
    pub fn for_mode(&self, mode: ConditioningMode) -> impl Iterator<Item = &PosthocEvaluation> {
        self.evaluations.iter().filter(move |e| e.mode == mode)
    }
}

pub(crate) fn test_rmse(data: &DatasetTable, pred_std: &crate::numerics::Matrix) -> Result<f64> {
    let pred = data.target_scaler().inverse(pred_std)?;
    rmse(pred.as_slice(), data.raw_y(Split::Test).as_slice())
}

/// Trains one base per seed and writes its checkpoint and traces.
pub fn run_train_base(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<TrainBaseReport> {
    let mut run = RunDir::create(cfg, "train-base", opts)?;
    let seeds = cfg.run_seeds(opts.seed_offset);
    let mut bases = Vec::new();
    for &seed in &seeds {
        let data = cfg.dataset.load(seed)?;
        let base = train_base_run(cfg, &data, seed)?;
        let dir = run.artifact(seed_dir(seed))?;
        for p in base.save(&dir, base_key(&cfg.dataset, cfg, seed), &data)? {
            run.artifact(p.strip_prefix(run.dir()).expect("inside run dir"))?;
        }
        let summary = BaseSummary {
            seed,
            hash: base.model.hash(),
            member_seeds: base.member_seeds.clone(),
            updates: base.updates,
            test_rmse: test_rmse(&data, &base.model.predict(&data.x(Split::Test))?)?,
        };
        log::info!("seed {seed}: base {} updates, test rmse {:.4}", summary.updates, summary.test_rmse);
        bases.push(summary);
    }
    run.write_json("report.json", &bases)?;
    let manifest = run.finish(cfg, &seeds)?;
    Ok(TrainBaseReport { bases, manifest })
}

pub fn evaluate_posthoc(
    model: &PosthocModel,
    data: &DatasetTable,
    experiment: &str,
    seed: u64,
    steps: Option<u64>,
) -> Result<PosthocEvaluation> {
    let x = data.x(Split::Test);
    let pred = posthoc_predictive(model, data, &x)?;
    let scores = pred.scores(data.raw_y(Split::Test).as_slice())?;
    let method = match model.head() {
        HeadKind::Gaussian => model.mode().name().to_string(),
        HeadKind::Gengauss => format!("{}_gg", model.mode().name()),
    };
    Ok(PosthocEvaluation {
        seed,
        mode: model.mode(),
        head: model.head(),
        steps,
        metrics: MetricsReport::new(experiment, &method, &data.name, seed, x.rows()).with_scores(scores),
        truth: truth_comparison(data, &pred.variances())?,
    })
}

fn checkpoint_name(mode: ConditioningMode) -> String {
    format!("posthoc_{}.json", mode.name())
}

/// Fits every configured mode on each seed's base and evaluates on the test split.
pub fn run_fit_posthoc(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<PosthocReport> {
    let mut run = RunDir::create(cfg, "fit-posthoc", opts)?;
    let seeds = cfg.run_seeds(opts.seed_offset);
    let mut evaluations = Vec::new();
    for &seed in &seeds {
        let data = cfg.dataset.load(seed)?;
        let base = obtain_base(cfg, &cfg.dataset, &data, seed, run.root())?;
        let dir = run.artifact(seed_dir(seed))?;
        let key = base_key(&cfg.dataset, cfg, seed);
        for p in base.save(&dir, key, &data)? {
            run.artifact(p.strip_prefix(run.dir()).expect("inside run dir"))?;
        }
        let probe = probe_for(&data, &cfg.probe, seed, cfg.posthoc.schedule.batch_size)?;
        for &mode in &cfg.posthoc.modes {
            let (model, trace) = fit_mode(cfg, &base, &probe, mode, seed)?;
            let rel = seed_dir(seed).join(checkpoint_name(mode));
            run.write_json(&rel, &model.to_checkpoint(Some(probe.manifest())))?;
            trace.write_csv(&run.artifact(seed_dir(seed).join(format!("posthoc_{}_trace.csv", mode.name())))?)?;
            let eval = evaluate_posthoc(&model, &data, &cfg.name, seed, Some(trace.total_steps))?;
            log::info!(
                "seed {seed} {}: nll {:.4} ece {:.4}",
                mode.name(),
                eval.metrics.nll.unwrap_or(f64::NAN),
                eval.metrics.ece.unwrap_or(f64::NAN)
            );
            evaluations.push(eval);
        }
    }
    write_evaluations(&mut run, &evaluations)?;
    let manifest = run.finish(cfg, &seeds)?;
    Ok(PosthocReport { evaluations, manifest })
}

fn write_evaluations(run: &mut RunDir, evaluations: &[PosthocEvaluation]) -> Result<()> {
    let metrics: Vec<MetricsReport> = evaluations.iter().map(|e| e.metrics.clone()).collect();
    append_csv(&run.artifact("metrics.csv")?, &metrics)?;
    run.write_json("report.json", &evaluations)?;
    Ok(())
}

/// Re-evaluates the checkpoints written by `fit-posthoc`, refusing any whose base hash differs.
pub fn run_eval(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<PosthocReport> {
    let mut run = RunDir::create(cfg, "eval", opts)?;
    let seeds = cfg.run_seeds(opts.seed_offset);
    let fitted = run.root().join("fit-posthoc");
    let mut evaluations = Vec::new();
    for &seed in &seeds {
        let data = cfg.dataset.load(seed)?;
        let dir = fitted.join(seed_dir(seed));
        let base = load_base(&dir.join("base.json"), &base_key(&cfg.dataset, cfg, seed))?;
        for &mode in &cfg.posthoc.modes {
            let ckpt: PosthocCheckpoint = read_json(&dir.join(checkpoint_name(mode)))?;
            let model = ckpt.into_model(base.model.clone(), false)?;
            evaluations.push(evaluate_posthoc(&model, &data, &cfg.name, seed, None)?);
        }
    }
    write_evaluations(&mut run, &evaluations)?;
    let manifest = run.finish(cfg, &seeds)?;
    Ok(PosthocReport { evaluations, manifest })
}
