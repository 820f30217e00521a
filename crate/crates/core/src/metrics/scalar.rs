use serde::{Deserialize, Serialize};

use crate::distributions::{GaussianPrediction, GenGaussianPrediction, PredictiveDistribution};
use crate::error::{Error, Result};
use crate::metrics::euc;
use crate::numerics::Matrix;

/// Quantile levels 0.05, 0.10, …, 0.95.
pub fn default_levels() -> Vec<f64> {
    (1..=19).map(|i| i as f64 / 20.0).collect()
}

pub fn rmse(pred: &[f64], targets: &[f64]) -> Result<f64> {
    if pred.len() != targets.len() {
        return Err(Error::shape("rmse", pred.len(), targets.len()));
    }
    if pred.is_empty() {
        return Err(Error::Empty("rmse inputs"));
    }
    let s: f64 = pred.iter().zip(targets).map(|(p, t)| (p - t).powi(2)).sum();
    Ok((s / pred.len() as f64).sqrt())
}

pub fn mean_nll<D: PredictiveDistribution>(preds: &[D], targets: &[f64]) -> Result<f64> {
    if preds.len() != targets.len() {
        return Err(Error::shape("mean_nll", preds.len(), targets.len()));
    }
    if preds.is_empty() {
        return Err(Error::Empty("nll inputs"));
    }
    let mut s = 0.0;
    for (p, &y) in preds.iter().zip(targets) {
        s += p.nll(y)?;
    }
    Ok(s / preds.len() as f64)
}

/// Probability integral transform values `F_i(y_i)`.
pub fn pit_values<D: PredictiveDistribution>(preds: &[D], targets: &[f64]) -> Result<Vec<f64>> {
    if preds.len() != targets.len() {
        return Err(Error::shape("pit_values", preds.len(), targets.len()));
    }
    preds.iter().zip(targets).map(|(p, &y)| p.cdf(y)).collect()
}

/// Mean over levels `p` of |p − fraction of samples with F_i(y_i) ≤ p|.
pub fn ece<D: PredictiveDistribution>(preds: &[D], targets: &[f64], levels: &[f64]) -> Result<f64> {
    if preds.is_empty() || levels.is_empty() {
        return Err(Error::Empty("ece inputs"));
    }
    let mut pit = pit_values(preds, targets)?;
    pit.sort_by(f64::total_cmp);
    let n = pit.len() as f64;
    let gap: f64 = levels
        .iter()
        .map(|&p| {
            let covered = pit.partition_point(|&u| u <= p) as f64;
            (p - covered / n).abs()
        })
        .sum();
    Ok(gap / levels.len() as f64)
}

/// Flattens per-channel mean and variance matrices into Gaussians.
pub fn gaussians_from(mean: &Matrix, variance: &Matrix) -> Result<Vec<GaussianPrediction>> {
    if mean.shape() != variance.shape() {
        return Err(Error::shape("gaussians_from", format!("{:?}", mean.shape()), format!("{:?}", variance.shape())));
    }
    Ok(mean.as_slice().iter().zip(variance.as_slice()).map(|(&m, &v)| GaussianPrediction::new(m, v)).collect())
}

pub fn gengaussians_from(mean: &Matrix, alpha: &Matrix, beta: &Matrix) -> Result<Vec<GenGaussianPrediction>> {
    if mean.shape() != alpha.shape() || mean.shape() != beta.shape() {
        return Err(Error::shape("gengaussians_from", format!("{:?}", mean.shape()), format!("{:?}", alpha.shape())));
    }
    Ok(mean
        .as_slice()
        .iter()
        .zip(alpha.as_slice())
        .zip(beta.as_slice())
        .map(|((&m, &a), &b)| GenGaussianPrediction::new(m, a, b))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub rmse: f64,
    pub nll: f64,
    pub ece: f64,
    pub euc: f64,
}

/// RMSE, NLL, ECE (default grid) and EUC of predictions against targets.
pub fn evaluate<D: PredictiveDistribution>(preds: &[D], targets: &[f64]) -> Result<Scores> {
    let means: Vec<f64> = preds.iter().map(|p| p.mean()).collect();
    let errors: Vec<f64> = means.iter().zip(targets).map(|(m, t)| m - t).collect();
    let vars: Vec<f64> = preds.iter().map(|p| p.variance()).collect();
    Ok(Scores {
        rmse: rmse(&means, targets)?,
        nll: mean_nll(preds, targets)?,
        ece: ece(preds, targets, &default_levels())?,
        euc: euc(&errors, &vars)?,
    })
}
