use crate::distributions::{gengauss_nll, gengauss_nll_grad, GenGaussianPrediction, BETA_MAX, BETA_MIN};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Mean of 0.5·(r²/v + ln v + ln 2π) over all entries, with the residual `r`
/// treated as a constant. Returns the loss and d(loss)/dv.
pub fn detached_gaussian_nll(residual: &Matrix, variance: &Matrix) -> Result<(f64, Matrix)> {
    if residual.shape() != variance.shape() {
        return Err(Error::shape(
            "detached_gaussian_nll",
            format!("{:?}", residual.shape()),
            format!("{:?}", variance.shape()),
        ));
    }
    let n = residual.as_slice().len();
    if n == 0 {
        return Err(Error::Empty("batch"));
    }
    let inv_n = 1.0 / n as f64;
    let mut loss = 0.0;
    let mut grad = Matrix::zeros(variance.rows(), variance.cols());
    for ((g, &r), &v) in grad.as_mut_slice().iter_mut().zip(residual.as_slice()).zip(variance.as_slice()) {
        let r2 = r * r;
        loss += 0.5 * (r2 / v + v.ln());
        *g = 0.5 * (1.0 / v - r2 / (v * v)) * inv_n;
    }
    Ok((loss * inv_n + HALF_LN_2PI, grad))
}

/// Generalized Gaussian counterpart of [`detached_gaussian_nll`]. `raw` holds
/// the auxiliary outputs `[α | β]` (β before clamping); the gradient is with
/// respect to `raw` and vanishes for clamped β entries.
pub fn detached_gengauss_nll(residual: &Matrix, raw: &Matrix) -> Result<(f64, Matrix)> {
    let k = residual.cols();
    if raw.rows() != residual.rows() || raw.cols() != 2 * k {
        return Err(Error::shape(
            "detached_gengauss_nll",
            format!("({}, {})", residual.rows(), 2 * k),
            format!("{:?}", raw.shape()),
        ));
    }
    let n = residual.as_slice().len();
    if n == 0 {
        return Err(Error::Empty("batch"));
    }
    let inv_n = 1.0 / n as f64;
    let mut loss = 0.0;
    let mut grad = Matrix::zeros(raw.rows(), raw.cols());
    for i in 0..residual.rows() {
        let row = raw.row(i);
        for c in 0..k {
            let beta_raw = row[k + c];
            let p = GenGaussianPrediction::new(0.0, row[c], beta_raw);
            let r = residual.get(i, c);
            loss += gengauss_nll(&p, r)?;
            let (da, db) = gengauss_nll_grad(&p, r);
            grad.set(i, c, da * inv_n);
            let inside = (BETA_MIN..=BETA_MAX).contains(&beta_raw);
            grad.set(i, k + c, if inside { db * inv_n } else { 0.0 });
        }
    }
    Ok((loss * inv_n, grad))
}
