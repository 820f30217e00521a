//! CSV ingestion for tabular benchmarks.

use std::path::{Path, PathBuf};

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::data::{DatasetTable, Split};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng, Stream};

/// Train/validation/test fractions; must sum to 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.72,
            val: 0.08,
            test: 0.20,
        }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split fractions must be in [0,1] and sum to 1: {self:?}")));
        }
        if self.train <= 0.0 {
            return Err(Error::Config("train fraction must be positive".into()));
        }
        Ok(())
    }

    /// Split tags for `n` already-shuffled rows: test and val use floor, train takes the rest.
    pub fn tags(&self, n: usize) -> Vec<Split> {
        let n_test = (self.test * n as f64).floor() as usize;
        let n_val = (self.val * n as f64).floor() as usize;
        let n_train = n - n_test - n_val;
        let mut tags = vec![Split::Train; n_train];
        tags.extend(std::iter::repeat_n(Split::Val, n_val));
        tags.extend(std::iter::repeat_n(Split::Test, n_test));
        tags
    }
}

/// Cache manifest describing how a table was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub n: usize,
    #[serde(rename = "D")]
    pub d: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub seed: u64,
    pub split_fractions: SplitFractions,
    pub dropped_columns: Vec<String>,
    pub rejected_rows: usize,
}

impl DatasetManifest {
    pub fn of(table: &DatasetTable, seed: u64, split_fractions: SplitFractions) -> Self {
        Self {
            name: table.name.clone(),
            n: table.len(),
            d: table.input_width(),
            k: table.output_width(),
            seed,
            split_fractions,
            dropped_columns: table.dropped_columns.clone(),
            rejected_rows: table.rejected_rows,
        }
    }
}

/// Resolves a CSV path, falling back to `$UQ_DATA_DIR/<path>` for relative
/// paths that do not exist from the working directory.
pub fn resolve_data_path(path: &Path) -> Result<PathBuf> {
    if path.exists() {
        return Ok(path.to_path_buf());
    }
    if path.is_relative() {
        if let Some(root) = std::env::var_os("UQ_DATA_DIR") {
            let candidate = Path::new(&root).join(path);
            if candidate.exists() {
                return Ok(candidate);
            }
        }
    }
    Err(Error::MissingFile(path.to_path_buf()))
}

/// Reads a headered numeric CSV, shuffles rows with `seed`, splits them and
/// fits standardizers on the training rows. Rows with a non-numeric or
/// non-finite cell are skipped and counted in `rejected_rows`.
pub fn load_csv(path: &Path, target_cols: &[String], seed: u64, fractions: SplitFractions) -> Result<DatasetTable> {
    fractions.validate()?;
    let path = resolve_data_path(path)?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(&path)?;
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if target_cols.is_empty() {
        return Err(Error::Config("at least one target column is required".into()));
    }
    let mut target_idx = Vec::new();
    for t in target_cols {
        let i = header
            .iter()
            .position(|h| h == t)
            .ok_or_else(|| Error::Config(format!("target column '{t}' not in header of {}", path.display())))?;
        target_idx.push(i);
    }
    let feature_idx: Vec<usize> = (0..header.len()).filter(|i| !target_idx.contains(i)).collect();
    if feature_idx.is_empty() {
        return Err(Error::Config("no feature columns left after selecting targets".into()));
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rejected = 0usize;
    for record in reader.records() {
        let record = record?;
        let parsed: Option<Vec<f64>> = record
            .iter()
            .map(|cell| cell.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect();
        match parsed {
            Some(vals) if vals.len() == header.len() => rows.push(vals),
            _ => rejected += 1,
        }
    }
    if rejected > 0 {
        log::warn!("{}: rejected {rejected} rows with non-numeric cells", path.display());
    }
    if rows.is_empty() {
        return Err(Error::Empty("CSV table"));
    }

    let mut order: Vec<usize> = (0..rows.len()).collect();
    Rng::new(seed).fork(Stream::Split).shuffle(&mut order);
    let x: Vec<Vec<f64>> = order.iter().map(|&r| feature_idx.iter().map(|&c| rows[r][c]).collect()).collect();
    let y: Vec<Vec<f64>> = order.iter().map(|&r| target_idx.iter().map(|&c| rows[r][c]).collect()).collect();
    let tags = fractions.tags(rows.len());
    let name = path.file_stem().map_or_else(|| "csv".to_string(), |s| s.to_string_lossy().into_owned());
    let mut table = DatasetTable::new(
        name,
        Matrix::from_rows(&x)?,
        Matrix::from_rows(&y)?,
        tags,
        feature_idx.iter().map(|&c| header[c].clone()).collect(),
        target_cols.to_vec(),
    )?;
    table.rejected_rows = rejected;
    Ok(table)
}
