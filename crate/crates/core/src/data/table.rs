use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Per-column affine scaling fitted on training rows (population std).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(m: &Matrix, rows: &[usize]) -> Self {
        let cols = m.cols();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; cols];
        for &r in rows {
            for (acc, v) in mean.iter_mut().zip(m.row(r)) {
                *acc += v;
            }
        }
        mean.iter_mut().for_each(|v| *v /= n);
        let mut var = vec![0.0; cols];
        for &r in rows {
            for ((acc, v), mu) in var.iter_mut().zip(m.row(r)).zip(&mean) {
                *acc += (v - mu).powi(2);
            }
        }
        let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
        Self { mean, std }
    }

    pub fn identity(cols: usize) -> Self {
        Self {
            mean: vec![0.0; cols],
            std: vec![1.0; cols],
        }
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, m: &Matrix) -> Result<Matrix> {
        self.check(m)?;
        let mut out = m.clone();
        for r in 0..out.rows() {
            for ((v, mu), sd) in out.row_mut(r).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - mu) / sd;
            }
        }
        Ok(out)
    }

    pub fn inverse(&self, m: &Matrix) -> Result<Matrix> {
        self.check(m)?;
        let mut out = m.clone();
        for r in 0..out.rows() {
            for ((v, mu), sd) in out.row_mut(r).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = *v * sd + mu;
            }
        }
        Ok(out)
    }

    /// Maps variances from standardized to original units (multiplies by std²).
    pub fn inverse_variance(&self, v: &Matrix) -> Result<Matrix> {
        self.check(v)?;
        let mut out = v.clone();
        for r in 0..out.rows() {
            for (x, sd) in out.row_mut(r).iter_mut().zip(&self.std) {
                *x *= sd * sd;
            }
        }
        Ok(out)
    }

    fn check(&self, m: &Matrix) -> Result<()> {
        if m.cols() != self.width() {
            return Err(Error::shape("Standardizer", self.width(), m.cols()));
        }
        Ok(())
    }
}

/// Ground-truth generative parameters per row, available for synthetic data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub mean: Vec<f64>,
    pub sigma: Vec<f64>,
}

/// Features and targets in original units plus the split tags and the
/// standardizers fitted on the training rows.
#[derive(Clone, Debug)]
pub struct DatasetTable {
    pub name: String,
    features: Matrix,
    targets: Matrix,
    split: Vec<Split>,
    pub feature_names: Vec<String>,
    pub target_names: Vec<String>,
    feature_scaler: Standardizer,
    target_scaler: Standardizer,
    pub dropped_columns: Vec<String>,
    pub rejected_rows: usize,
    truth: Option<GroundTruth>,
}

impl DatasetTable {
    /// Fits standardizers on the training rows; constant feature columns are
    /// dropped (with a warning), constant target columns are an error.
    pub fn new(
        name: impl Into<String>,
        features: Matrix,
        targets: Matrix,
        split: Vec<Split>,
        feature_names: Vec<String>,
        target_names: Vec<String>,
    ) -> Result<Self> {
        let name = name.into();
        if features.rows() != targets.rows() || features.rows() != split.len() {
            return Err(Error::shape(
                "DatasetTable::new",
                format!("{} rows everywhere", features.rows()),
                format!("targets {}, split {}", targets.rows(), split.len()),
            ));
        }
        if feature_names.len() != features.cols() || target_names.len() != targets.cols() {
            return Err(Error::shape(
                "DatasetTable::new",
                "one name per column",
                format!("{}/{} names", feature_names.len(), target_names.len()),
            ));
        }
        if !features.is_finite() || !targets.is_finite() {
            return Err(Error::Domain(format!("dataset {name} contains NaN or Inf")));
        }
        let train: Vec<usize> = split
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Split::Train)
            .map(|(i, _)| i)
            .collect();
        if train.is_empty() {
            return Err(Error::Empty("training split"));
        }
        let fscale = Standardizer::fit(&features, &train);
        let keep: Vec<usize> = (0..features.cols()).filter(|&c| fscale.std[c] > 0.0).collect();
        let mut dropped_columns = Vec::new();
        for c in 0..features.cols() {
            if !keep.contains(&c) {
                log::warn!("dataset {name}: dropping constant feature column '{}'", feature_names[c]);
                dropped_columns.push(feature_names[c].clone());
            }
        }
        let features = features.select_cols(&keep);
        let feature_names = keep.iter().map(|&c| feature_names[c].clone()).collect();
        let feature_scaler = Standardizer {
            mean: keep.iter().map(|&c| fscale.mean[c]).collect(),
            std: keep.iter().map(|&c| fscale.std[c]).collect(),
        };
        let target_scaler = Standardizer::fit(&targets, &train);
        if target_scaler.std.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::Domain(format!("dataset {name}: constant target column")));
        }
        Ok(Self {
            name,
            features,
            targets,
            split,
            feature_names,
            target_names,
            feature_scaler,
            target_scaler,
            dropped_columns,
            rejected_rows: 0,
            truth: None,
        })
    }

    pub fn with_truth(mut self, truth: GroundTruth) -> Result<Self> {
        if truth.mean.len() != self.len() || truth.sigma.len() != self.len() {
            return Err(Error::shape("DatasetTable::with_truth", self.len(), truth.mean.len()));
        }
        self.truth = Some(truth);
        Ok(self)
    }

    /// Row subset that keeps this table's standardizers (no refit).
    pub fn subset(&self, rows: &[usize], split: Vec<Split>) -> Result<Self> {
        if rows.len() != split.len() {
            return Err(Error::shape("DatasetTable::subset", rows.len(), split.len()));
        }
        let truth = self.truth.as_ref().map(|t| GroundTruth {
            mean: rows.iter().map(|&r| t.mean[r]).collect(),
            sigma: rows.iter().map(|&r| t.sigma[r]).collect(),
        });
        Ok(Self {
            name: self.name.clone(),
            features: self.features.select_rows(rows),
            targets: self.targets.select_rows(rows),
            split,
            feature_names: self.feature_names.clone(),
            target_names: self.target_names.clone(),
            feature_scaler: self.feature_scaler.clone(),
            target_scaler: self.target_scaler.clone(),
            dropped_columns: self.dropped_columns.clone(),
            rejected_rows: self.rejected_rows,
            truth,
        })
    }

    pub fn len(&self) -> usize {
        self.split.len()
    }

    pub fn is_empty(&self) -> bool {
        self.split.is_empty()
    }

    pub fn input_width(&self) -> usize {
        self.features.cols()
    }

    pub fn output_width(&self) -> usize {
        self.targets.cols()
    }

    pub fn split_tags(&self) -> &[Split] {
        &self.split
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        self.split
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == split)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn count(&self, split: Split) -> usize {
        self.split.iter().filter(|s| **s == split).count()
    }

    pub fn feature_scaler(&self) -> &Standardizer {
        &self.feature_scaler
    }

    pub fn target_scaler(&self) -> &Standardizer {
        &self.target_scaler
    }

    pub fn raw_features(&self) -> &Matrix {
        &self.features
    }

    pub fn raw_targets(&self) -> &Matrix {
        &self.targets
    }

    /// Standardized features of one split.
    pub fn x(&self, split: Split) -> Matrix {
        self.feature_scaler
            .transform(&self.features.select_rows(&self.indices(split)))
            .expect("scaler width matches features")
    }

    /// Standardized targets of one split.
    pub fn y(&self, split: Split) -> Matrix {
        self.target_scaler
            .transform(&self.targets.select_rows(&self.indices(split)))
            .expect("scaler width matches targets")
    }

    pub fn raw_x(&self, split: Split) -> Matrix {
        self.features.select_rows(&self.indices(split))
    }

    pub fn raw_y(&self, split: Split) -> Matrix {
        self.targets.select_rows(&self.indices(split))
    }

    pub fn truth(&self, split: Split) -> Option<GroundTruth> {
        let t = self.truth.as_ref()?;
        let idx = self.indices(split);
        Some(GroundTruth {
            mean: idx.iter().map(|&r| t.mean[r]).collect(),
            sigma: idx.iter().map(|&r| t.sigma[r]).collect(),
        })
    }

    pub fn standardize_features(&self, raw: &Matrix) -> Result<Matrix> {
        self.feature_scaler.transform(raw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> DatasetTable {
        let x = Matrix::from_rows(&[
            vec![1.0, 5.0, 7.0],
            vec![2.0, 5.0, 1.0],
            vec![3.0, 5.0, 4.0],
            vec![100.0, 9.0, -50.0],
        ])
        .unwrap();
        let y = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![4.0], vec![1000.0]]).unwrap();
        DatasetTable::new(
            "t",
            x,
            y,
            vec![Split::Train, Split::Train, Split::Train, Split::Test],
            vec!["a".into(), "b".into(), "c".into()],
            vec!["y".into()],
        )
        .unwrap()
    }

    #[test]
    fn hand_computed_standardization() {
        let t = table();
        let x = t.x(Split::Train);
        let expected = [-1.224_744_871_391_589, 0.0, 1.224_744_871_391_589];
        for (r, e) in expected.iter().enumerate() {
            assert!((x.get(r, 0) - e).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_column_dropped_and_test_rows_ignored() {
        let t = table();
        // column b is constant on train rows even though the test row differs
        assert_eq!(t.dropped_columns, vec!["b".to_string()]);
        assert_eq!(t.input_width(), 2);
        let recomputed = Standardizer::fit(&t.raw_features().clone(), &t.indices(Split::Train));
        assert_eq!(&recomputed, t.feature_scaler());
        assert!((t.feature_scaler().mean[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn destandardization_round_trip() {
        let t = table();
        let y = t.y(Split::Test);
        let back = t.target_scaler().inverse(&y).unwrap();
        assert!((back.get(0, 0) - 1000.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_rejected() {
        let x = Matrix::from_rows(&[vec![f64::NAN]]).unwrap();
        let y = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let err = DatasetTable::new("bad", x, y, vec![Split::Train], vec!["a".into()], vec!["y".into()]);
        assert!(matches!(err, Err(Error::Domain(_))));
    }
}
