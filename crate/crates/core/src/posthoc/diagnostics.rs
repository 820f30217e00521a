use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::posthoc::{ConditioningMode, PosthocModel};

/// Distance of frozen outputs from the training output range, and how the
/// predicted variance grows with it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpistemicDiagnostics {
    pub manifold_lo: Vec<f64>,
    pub manifold_hi: Vec<f64>,
    /// Per evaluation row, Euclidean norm of the per-channel box distances.
    pub distances: Vec<f64>,
    /// Per evaluation row, mean predicted variance minus the training mean.
    pub excess_variance: Vec<f64>,
    pub id_mean_variance: f64,
    pub eval_mean_variance: f64,
    /// Least-squares slope through the origin of excess variance on distance.
    pub lambda_fit: f64,
}

fn row_means(m: &Matrix) -> Vec<f64> {
    (0..m.rows()).map(|r| m.row(r).iter().sum::<f64>() / m.cols() as f64).collect()
}

/// Compares the outputs of the base on `eval_x` against the per-channel box
/// spanned by its outputs on `train_x`.
pub fn epistemic_diagnostics(m: &PosthocModel, train_x: &Matrix, eval_x: &Matrix) -> Result<EpistemicDiagnostics> {
    if m.mode() == ConditioningMode::InputOnly {
        return Err(Error::Usage("diagnostics need a model that sees f(x)".into()));
    }
    if train_x.rows() == 0 || eval_x.rows() == 0 {
        return Err(Error::Empty("diagnostic inputs"));
    }
    let f_train = m.predict_mean(train_x)?;
    let k = f_train.cols();
    let mut lo = vec![f64::INFINITY; k];
    let mut hi = vec![f64::NEG_INFINITY; k];
    for r in 0..f_train.rows() {
        for (c, &v) in f_train.row(r).iter().enumerate() {
            lo[c] = lo[c].min(v);
            hi[c] = hi[c].max(v);
        }
    }
    if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
        return Err(Error::Domain("training outputs are constant in some channel".into()));
    }
    let id_mean_variance = crate::numerics::mean(&row_means(&m.predict_variance(train_x)?));

    let f_eval = m.predict_mean(eval_x)?;
    let v_eval = row_means(&m.score(eval_x, &f_eval)?.variance());
    let distances: Vec<f64> = (0..f_eval.rows())
        .map(|r| {
            f_eval
                .row(r)
                .iter()
                .enumerate()
                .map(|(c, &v)| {
                    let d = (lo[c] - v).max(v - hi[c]).max(0.0);
                    d * d
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let excess: Vec<f64> = v_eval.iter().map(|v| v - id_mean_variance).collect();
    let sxx: f64 = distances.iter().map(|d| d * d).sum();
    let sxy: f64 = distances.iter().zip(&excess).map(|(d, e)| d * e).sum();
    let lambda_fit = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    Ok(EpistemicDiagnostics {
        manifold_lo: lo,
        manifold_hi: hi,
        distances,
        eval_mean_variance: crate::numerics::mean(&v_eval),
        excess_variance: excess,
        id_mean_variance,
        lambda_fit,
    })
}
