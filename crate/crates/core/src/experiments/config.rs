use std::path::{Path, PathBuf};

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::data::{load_csv, gen_toy, AugmentationSpec, DatasetTable, PerturbationSweep, ProbeConfig, SplitFractions, ToySpec};
use crate::error::{Error, Result};
use crate::nn::{sha256_hex, Activation, AdamWConfig, MlpConfig, TrainSchedule};
use crate::posthoc::{AuxConfig, ConditioningMode, HeadKind};

/// Where the rows of an experiment come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    /// Synthetic 1-D data. The `seed` field is replaced by the run seed.
    Toy(ToySpec),
    Csv(CsvSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct CsvSpec {
    /// Display name; defaults to the file stem.
    #[serde(default)]
    pub name: Option<String>,
    /// Relative paths fall back to `$UQ_DATA_DIR/<path>`.
    pub path: PathBuf,
    pub targets: Vec<String>,
    #[serde(default)]
    pub split: SplitFractions,
}

impl DatasetSpec {
    pub fn name(&self) -> String {
        match self {
            DatasetSpec::Toy(_) => "toy".into(),
            DatasetSpec::Csv(c) => c.name.clone().unwrap_or_else(|| {
                c.path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into())
            }),
        }
    }

    /// Materializes the table for one run seed; the seed drives sampling and splits.
    pub fn load(&self, seed: u64) -> Result<DatasetTable> {
        match self {
            DatasetSpec::Toy(spec) => gen_toy(&ToySpec { seed, ..spec.clone() }),
            DatasetSpec::Csv(c) => {
                let mut t = load_csv(&c.path, &c.targets, seed, c.split)?;
                t.name = self.name();
                Ok(t)
            }
        }
    }

    pub fn toy(&self) -> Option<&ToySpec> {
        match self {
            DatasetSpec::Toy(t) => Some(t),
            DatasetSpec::Csv(_) => None,
        }
    }
}

/// Frozen MSE regressor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default)]
pub struct BaseSpec {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    /// Networks averaged into the base prediction.
    pub members: usize,
    pub schedule: TrainSchedule,
    pub optimizer: AdamWConfig,
}

impl Default for BaseSpec {
    fn default() -> Self {
        Self {
            hidden: vec![100, 100, 100],
            activation: Activation::Relu,
            members: 1,
            schedule: TrainSchedule::default(),
            optimizer: AdamWConfig::new(1e-4, 0.0),
        }
    }
}

impl BaseSpec {
    pub fn mlp(&self, d: usize, k: usize) -> MlpConfig {
        MlpConfig::regression(d, &self.hidden, k, self.activation)
    }
}

/// How long auxiliary networks train.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum PosthocBudget {
    /// Half the mean number of base updates, no early stopping.
    #[default]
    HalfBase,
    /// A fixed number of updates, no early stopping.
    Steps(u64),
    /// The posthoc schedule as written, with early stopping on the probe's validation rows.
    EarlyStopping,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default)]
pub struct PosthocSpec {
    pub modes: Vec<ConditioningMode>,
    pub head: HeadKind,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub dropout_p: f64,
    pub schedule: TrainSchedule,
    pub optimizer: AdamWConfig,
    pub budget: PosthocBudget,
}

impl Default for PosthocSpec {
    fn default() -> Self {
        Self {
            modes: ConditioningMode::ALL.to_vec(),
            head: HeadKind::Gaussian,
            hidden: vec![50, 50, 50],
            activation: Activation::Tanh,
            dropout_p: 0.0,
            schedule: TrainSchedule::default(),
            optimizer: AdamWConfig::new(1e-4, 0.01),
            budget: PosthocBudget::HalfBase,
        }
    }
}

impl PosthocSpec {
    pub fn aux(&self, mode: ConditioningMode) -> AuxConfig {
        AuxConfig {
            mode,
            head: self.head,
            hidden: self.hidden.clone(),
            activation: self.activation,
            dropout_p: self.dropout_p,
        }
    }

    /// Schedule after applying the budget rule for a base that took `base_updates` steps.
    pub fn schedule_for(&self, base_updates: u64) -> TrainSchedule {
        match self.budget {
            PosthocBudget::HalfBase => self.schedule.fixed_budget(base_updates / 2),
            PosthocBudget::Steps(n) => self.schedule.fixed_budget(n),
            PosthocBudget::EarlyStopping => self.schedule.clone(),
        }
    }
}

/// Gaussian deep ensemble sharing the base architecture and training schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct EnsembleSpec {
    pub members: usize,
}

/// Out-of-distribution evaluation set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OodSource {
    /// Toy inputs on both flanks of the training interval, each `width_fraction` of its length.
    ToyFlanks { n: usize, width_fraction: f64 },
    /// Test inputs with every augmentation applied to every row.
    CorruptedTest { augmentations: Vec<AugmentationSpec> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct OodSpec {
    pub source: OodSource,
    /// Added to the probe for the augmented model; the plain model uses the probe as configured.
    pub probe_augmentations: Vec<AugmentationSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct CrossnetSpec {
    /// One base network is trained per augmentation (with its `probability`);
    /// at test time each augmentation is applied to every row.
    pub augmentations: Vec<AugmentationSpec>,
    #[serde(default = "hybrid")]
    pub mode: ConditioningMode,
}

fn hybrid() -> ConditioningMode {
    ConditioningMode::Hybrid
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct WidthPreset {
    pub name: String,
    pub hidden: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "axis", rename_all = "snake_case")]
pub enum SweepSpec {
    ProbeFraction {
        #[serde(default = "default_fractions")]
        values: Vec<f64>,
    },
    ModelWidth {
        #[serde(default = "default_widths")]
        presets: Vec<WidthPreset>,
    },
}

fn default_fractions() -> Vec<f64> {
    vec![0.1, 0.5, 1.0]
}

pub fn default_widths() -> Vec<WidthPreset> {
    [("small", vec![16, 16]), ("medium", vec![32, 32, 32]), ("large", vec![50, 50, 50])]
        .into_iter()
        .map(|(name, hidden)| WidthPreset { name: name.into(), hidden })
        .collect()
}

/// A complete experiment description. Every random choice derives from `seeds`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ExperimentConfig {
    pub name: String,
    pub dataset: DatasetSpec,
    /// Additional datasets for the benchmark suite; `dataset` is always the first.
    #[serde(default)]
    pub suite: Vec<DatasetSpec>,
    #[serde(default)]
    pub base: BaseSpec,
    #[serde(default)]
    pub posthoc: PosthocSpec,
    #[serde(default = "ProbeConfig::full")]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub ensemble: Option<EnsembleSpec>,
    #[serde(default)]
    pub ood: Option<OodSpec>,
    #[serde(default)]
    pub perturb: Option<PerturbationSweep>,
    #[serde(default)]
    pub crossnet: Option<CrossnetSpec>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("runs")
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must be nonempty".into()));
        }
        if self.base.members == 0 {
            return Err(Error::Config("base.members must be at least 1".into()));
        }
        if self.posthoc.modes.is_empty() {
            return Err(Error::Config("posthoc.modes must be nonempty".into()));
        }
        if !(0.0..1.0).contains(&self.posthoc.dropout_p) {
            return Err(Error::Config("posthoc.dropout_p must be in [0,1)".into()));
        }
        if !(self.probe.fraction > 0.0 && self.probe.fraction <= 1.0) {
            return Err(Error::Config("probe.fraction must be in (0,1]".into()));
        }
        self.base.schedule.validate()?;
        self.posthoc.schedule.validate()?;
        self.base.optimizer.validate()?;
        self.posthoc.optimizer.validate()?;
        for ds in std::iter::once(&self.dataset).chain(&self.suite) {
            match ds {
                DatasetSpec::Toy(t) => t.validate()?,
                DatasetSpec::Csv(c) => {
                    c.split.validate()?;
                    if c.targets.is_empty() {
                        return Err(Error::Config(format!("dataset {}: no target columns", ds.name())));
                    }
                }
            }
        }
        if let Some(e) = &self.ensemble {
            if e.members < 2 {
                return Err(Error::Config("ensemble.members must be at least 2".into()));
            }
        }
        if let Some(p) = &self.perturb {
            p.validate()?;
        }
        if let Some(c) = &self.crossnet {
            if c.augmentations.len() < 2 {
                return Err(Error::Config("crossnet needs at least two augmentations".into()));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form. Formatting and key order do not
    /// affect it; any change of content does.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        sha256_hex(value.to_string().as_bytes())
    }

    /// Run seeds shifted by `offset`.
    pub fn run_seeds(&self, offset: u64) -> Vec<u64> {
        self.seeds.iter().map(|s| s + offset).collect()
    }

    pub fn datasets(&self) -> Vec<&DatasetSpec> {
        std::iter::once(&self.dataset).chain(&self.suite).collect()
    }
}

/// JSON schema of the experiment configuration file.
pub fn config_schema() -> String {
    serde_json::to_string_pretty(&schemars::schema_for!(ExperimentConfig)).expect("schema serializes")
}
