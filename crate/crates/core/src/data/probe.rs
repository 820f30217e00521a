use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::data::{AugmentationSpec, DatasetTable, Split};
use crate::error::{Error, Result};
use crate::numerics::{Rng, Stream};

/// The subset of training rows (and the augmentations) used to fit a post-hoc model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ProbeConfig {
    pub fraction: f64,
    #[serde(default)]
    pub augmentations: Vec<AugmentationSpec>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            fraction: 0.1,
            augmentations: Vec::new(),
            seed: 0,
        }
    }
}

impl ProbeConfig {
    pub fn full() -> Self {
        Self {
            fraction: 1.0,
            ..Self::default()
        }
    }

    pub fn with_augmentations(mut self, augmentations: Vec<AugmentationSpec>) -> Self {
        self.augmentations = augmentations;
        self
    }

    /// Number of probe rows drawn from `n_train` training rows: ⌊fraction·n⌋.
    pub fn size(&self, n_train: usize) -> usize {
        (self.fraction * n_train as f64).floor() as usize
    }
}

/// Recorded description of a probe, stored alongside post-hoc checkpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeManifest {
    pub config: ProbeConfig,
    pub rows: usize,
    /// Augmentations are applied per batch during post-hoc training.
    pub augment_on_the_fly: bool,
}

#[derive(Clone, Debug)]
pub struct Probe {
    /// Sampled rows tagged `Train`, followed by the source table's validation rows.
    pub table: DatasetTable,
    pub config: ProbeConfig,
    /// Row indices into the source table, in probe order.
    pub source_rows: Vec<usize>,
}

impl Probe {
    pub fn manifest(&self) -> ProbeManifest {
        ProbeManifest {
            config: self.config.clone(),
            rows: self.table.count(Split::Train),
            augment_on_the_fly: !self.config.augmentations.is_empty(),
        }
    }
}

/// Uniform subsample of the training split without replacement. Validation
/// rows are carried over unchanged for early stopping; standardizers are not refit.
pub fn make_probe(data: &DatasetTable, cfg: &ProbeConfig, batch_size: usize) -> Result<Probe> {
    if !(cfg.fraction > 0.0 && cfg.fraction <= 1.0) {
        return Err(Error::Config(format!("probe fraction must be in (0,1], got {}", cfg.fraction)));
    }
    for a in &cfg.augmentations {
        a.validate(data.input_width())?;
    }
    let train = data.indices(Split::Train);
    let k = cfg.size(train.len());
    if k == 0 || k < batch_size {
        return Err(Error::Config(format!(
            "probe of {k} rows is smaller than one batch ({batch_size})"
        )));
    }
    let rows: Vec<usize> = if k == train.len() {
        train.clone()
    } else {
        let mut picked = Rng::new(cfg.seed).fork(Stream::Probe).sample_indices(train.len(), k);
        picked.sort_unstable();
        picked.into_iter().map(|i| train[i]).collect()
    };
    let val = data.indices(Split::Val);
    let mut all = rows.clone();
    all.extend_from_slice(&val);
    let mut tags = vec![Split::Train; rows.len()];
    tags.extend(std::iter::repeat_n(Split::Val, val.len()));
    Ok(Probe {
        table: data.subset(&all, tags)?,
        config: cfg.clone(),
        source_rows: rows,
    })
}
