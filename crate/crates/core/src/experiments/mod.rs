//! Reproducible experiment runs driven by a JSON configuration.
//!
//! Each command writes into `<out>/<command>/` and finishes with a
//! `manifest.json` carrying the config hash. Per-seed artifacts live under
//! `seed_<n>/`. Commands that need a base reuse the one left by `train-base`
//! in the same output root when it was produced with identical settings.

mod artifacts;
mod commands;
mod config;
mod crossnet;
mod ood;
mod perturb;
mod pipeline;
mod suite;
mod sweep;

use std::str::FromStr;

pub use artifacts::{write_csv_rows, RunDir, RunManifest, RunOptions};
pub use commands::{
    evaluate_posthoc, run_eval, run_fit_posthoc, run_train_base, BaseSummary, PosthocEvaluation, PosthocReport,
    TrainBaseReport,
};
pub use config::{
    config_schema, default_widths, BaseSpec, CrossnetSpec, CsvSpec, DatasetSpec, EnsembleSpec, ExperimentConfig, OodSource,
    OodSpec, PosthocBudget, PosthocSpec, SweepSpec, WidthPreset,
};
pub use crossnet::{run_crossnet, CrossnetCell, CrossnetReport, CrossnetSeedSummary};
pub use ood::{ood_inputs, run_ood, variance_scores, OodCell, OodReport};
pub use perturb::{nondecreasing_within, run_perturb, PerturbLevel, PerturbReport, PerturbSummary};
pub use pipeline::{
    base_key, ensemble_predictive, fit_mode, load_base, obtain_base, posthoc_predictive, probe_for, train_base_run,
    train_ensemble_run, truth_comparison, BaseRecord, BaseRun, Predictive, SeedStreams, TruthComparison,
};
pub use suite::{aggregate, render_table, run_uci_suite, SuiteCell, SuiteReport, SuiteRow, DEFAULT_ENSEMBLE_MEMBERS};
pub use sweep::{run_sweep, SweepCell, SweepReport, SweepSummary};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    TrainBase,
    FitPosthoc,
    Eval,
    Ood,
    Perturb,
    Crossnet,
    UciSuite,
    Sweep,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::TrainBase,
        Command::FitPosthoc,
        Command::Eval,
        Command::Ood,
        Command::Perturb,
        Command::Crossnet,
        Command::UciSuite,
        Command::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::TrainBase => "train-base",
            Command::FitPosthoc => "fit-posthoc",
            Command::Eval => "eval",
            Command::Ood => "ood",
            Command::Perturb => "perturb",
            Command::Crossnet => "crossnet",
            Command::UciSuite => "uci-suite",
            Command::Sweep => "sweep",
        }
    }

    /// Runs the command and returns its manifest.
    pub fn run(self, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunManifest> {
        Ok(match self {
            Command::TrainBase => run_train_base(cfg, opts)?.manifest,
            Command::FitPosthoc => run_fit_posthoc(cfg, opts)?.manifest,
            Command::Eval => run_eval(cfg, opts)?.manifest,
            Command::Ood => run_ood(cfg, opts)?.manifest,
            Command::Perturb => run_perturb(cfg, opts)?.manifest,
            Command::Crossnet => run_crossnet(cfg, opts)?.manifest,
            Command::UciSuite => run_uci_suite(cfg, opts)?.manifest,
            Command::Sweep => run_sweep(cfg, opts)?.manifest,
        })
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown command '{s}'")))
    }
}
