//! Gaussian and generalized Gaussian predictive heads: NLL, CDF, moments and
//! the ensemble mixture.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{digamma, ln_gamma_unchecked, reg_lower_incomplete_gamma, std_normal_cdf};

/// Smallest variance a positive head can emit, in standardized units.
pub const VARIANCE_FLOOR: f64 = 1e-6;
pub const BETA_MIN: f64 = 0.2;
pub const BETA_MAX: f64 = 10.0;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

pub trait PredictiveDistribution {
    fn mean(&self) -> f64;
    fn variance(&self) -> f64;
    fn nll(&self, y: f64) -> Result<f64>;
    fn cdf(&self, y: f64) -> Result<f64>;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianPrediction {
    pub mu: f64,
    pub sigma2: f64,
}

impl GaussianPrediction {
    pub fn new(mu: f64, sigma2: f64) -> Self {
        Self { mu, sigma2 }
    }

    fn check(&self) -> Result<()> {
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() || !self.mu.is_finite() {
            return Err(Error::Domain(format!("invalid Gaussian (mu={}, sigma2={})", self.mu, self.sigma2)));
        }
        Ok(())
    }
}

impl PredictiveDistribution for GaussianPrediction {
    fn mean(&self) -> f64 {
        self.mu
    }

    fn variance(&self) -> f64 {
        self.sigma2
    }

    fn nll(&self, y: f64) -> Result<f64> {
        gauss_nll(self, y)
    }

    fn cdf(&self, y: f64) -> Result<f64> {
        gauss_cdf(self, y)
    }
}

/// Generalized Gaussian with density β/(2αΓ(1/β))·exp(−(|y−μ|/α)^β).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenGaussianPrediction {
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl GenGaussianPrediction {
    /// Builds a prediction with `beta` clamped into the supported shape range.
    pub fn new(mu: f64, alpha: f64, beta: f64) -> Self {
        Self {
            mu,
            alpha,
            beta: beta.clamp(BETA_MIN, BETA_MAX),
        }
    }

    /// The member of the family that coincides with N(mu, sigma2).
    pub fn from_gaussian(g: &GaussianPrediction) -> Self {
        Self::new(g.mu, (2.0 * g.sigma2).sqrt(), 2.0)
    }

    fn check(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.beta > 0.0) || !self.alpha.is_finite() || !self.beta.is_finite() || !self.mu.is_finite() {
            return Err(Error::Domain(format!(
                "invalid generalized Gaussian (mu={}, alpha={}, beta={})",
                self.mu, self.alpha, self.beta
            )));
        }
        Ok(())
    }

    /// Density at `y`, used by quadrature checks.
    pub fn pdf(&self, y: f64) -> Result<f64> {
        Ok((-gengauss_nll(self, y)?).exp())
    }
}

impl PredictiveDistribution for GenGaussianPrediction {
    fn mean(&self) -> f64 {
        self.mu
    }

    /// α²·Γ(3/β)/Γ(1/β).
    fn variance(&self) -> f64 {
        let b = self.beta;
        self.alpha * self.alpha * (ln_gamma_unchecked(3.0 / b) - ln_gamma_unchecked(1.0 / b)).exp()
    }

    fn nll(&self, y: f64) -> Result<f64> {
        gengauss_nll(self, y)
    }

    fn cdf(&self, y: f64) -> Result<f64> {
        gengauss_cdf(self, y)
    }
}

/// 0.5·[(y−μ)²/σ² + ln σ² + ln 2π].
pub fn gauss_nll(pred: &GaussianPrediction, y: f64) -> Result<f64> {
    pred.check()?;
    let r = y - pred.mu;
    Ok(0.5 * (r * r / pred.sigma2 + pred.sigma2.ln()) + HALF_LN_2PI)
}

pub fn gauss_cdf(pred: &GaussianPrediction, y: f64) -> Result<f64> {
    pred.check()?;
    Ok(std_normal_cdf((y - pred.mu) / pred.sigma2.sqrt()))
}

/// −ln[β/(2αΓ(1/β))] + (|y−μ|/α)^β.
pub fn gengauss_nll(pred: &GenGaussianPrediction, y: f64) -> Result<f64> {
    pred.check()?;
    let (a, b) = (pred.alpha, pred.beta);
    let z = (y - pred.mu).abs() / a;
    Ok(-(b.ln() - (2.0 * a).ln() - ln_gamma_unchecked(1.0 / b)) + z.powf(b))
}

pub fn gengauss_cdf(pred: &GenGaussianPrediction, y: f64) -> Result<f64> {
    pred.check()?;
    let d = y - pred.mu;
    if d == 0.0 {
        return Ok(0.5);
    }
    let p = reg_lower_incomplete_gamma(1.0 / pred.beta, (d.abs() / pred.alpha).powf(pred.beta))?;
    Ok(if d > 0.0 { 0.5 + 0.5 * p } else { 0.5 - 0.5 * p })
}

/// Partial derivatives of the generalized Gaussian NLL with respect to α and β.
pub fn gengauss_nll_grad(pred: &GenGaussianPrediction, y: f64) -> (f64, f64) {
    let (a, b) = (pred.alpha, pred.beta);
    let r = (y - pred.mu).abs();
    let z = r / a;
    let zb = z.powf(b);
    let d_alpha = 1.0 / a - b * zb / a;
    let ln_z = if r > 0.0 { z.ln() } else { 0.0 };
    let d_beta = -1.0 / b - digamma(1.0 / b) / (b * b) + zb * ln_z;
    (d_alpha, d_beta)
}

/// Mixture moments split into the two terms of the total-variance decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureMoments {
    pub mean: f64,
    /// Mean of the member variances.
    pub aleatoric: f64,
    /// Unbiased variance of the member means.
    pub epistemic: f64,
}

impl MixtureMoments {
    pub fn total(&self) -> f64 {
        self.aleatoric + self.epistemic
    }

    pub fn prediction(&self) -> GaussianPrediction {
        GaussianPrediction::new(self.mean, self.total())
    }
}

pub fn mixture_decomposition(preds: &[GaussianPrediction]) -> Result<MixtureMoments> {
    if preds.len() < 2 {
        return Err(Error::Domain(format!("ensemble needs at least 2 members, got {}", preds.len())));
    }
    let m = preds.len() as f64;
    let mean = preds.iter().map(|p| p.mu).sum::<f64>() / m;
    let aleatoric = preds.iter().map(|p| p.sigma2).sum::<f64>() / m;
    let epistemic = preds.iter().map(|p| (p.mu - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Ok(MixtureMoments {
        mean,
        aleatoric,
        epistemic,
    })
}

/// Gaussian with the mixture's mean and total variance.
pub fn ensemble_mixture_moments(preds: &[GaussianPrediction]) -> Result<GaussianPrediction> {
    Ok(mixture_decomposition(preds)?.prediction())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_nll_reference_values() {
        let g = GaussianPrediction::new(0.0, 1.0);
        assert_abs_diff_eq!(gauss_nll(&g, 0.0).unwrap(), 0.9189385332046727, epsilon = 1e-12);
        assert_abs_diff_eq!(gauss_nll(&g, 1.0).unwrap(), 1.4189385332046727, epsilon = 1e-12);
        assert!(gauss_nll(&GaussianPrediction::new(0.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn gauss_nll_optimum_over_variance() {
        let r: f64 = 0.7;
        let best = gauss_nll(&GaussianPrediction::new(0.0, r * r), r).unwrap();
        assert_abs_diff_eq!(best, 0.5 * (1.0 + (r * r).ln() + (2.0 * std::f64::consts::PI).ln()), epsilon = 1e-12);
        for s2 in [0.3, 0.48, 0.5, 1.0] {
            assert!(gauss_nll(&GaussianPrediction::new(0.0, s2), r).unwrap() >= best);
        }
    }

    #[test]
    fn gauss_cdf_reference_values() {
        let g = GaussianPrediction::new(0.0, 1.0);
        assert_eq!(gauss_cdf(&g, 0.0).unwrap(), 0.5);
        assert_abs_diff_eq!(gauss_cdf(&g, 1.96).unwrap(), 0.9750021048517795, epsilon = 1e-10);
        let h = GaussianPrediction::new(3.0, 2.5);
        assert_abs_diff_eq!(gauss_cdf(&h, 4.2).unwrap() + gauss_cdf(&h, 1.8).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn gengauss_special_cases() {
        let g = GenGaussianPrediction::new(0.0, 2f64.sqrt(), 2.0);
        assert_abs_diff_eq!(gengauss_nll(&g, 0.0).unwrap(), 0.9189385332046727, epsilon = 1e-10);
        let lap = GenGaussianPrediction::new(1.0, 0.3, 1.0);
        assert_abs_diff_eq!(gengauss_nll(&lap, 1.0).unwrap(), 0.6f64.ln(), epsilon = 1e-12);
        assert_eq!(gengauss_cdf(&lap, 1.0).unwrap(), 0.5);
    }

    #[test]
    fn beta_is_clamped() {
        assert_eq!(GenGaussianPrediction::new(0.0, 1.0, 0.01).beta, BETA_MIN);
        assert_eq!(GenGaussianPrediction::new(0.0, 1.0, 50.0).beta, BETA_MAX);
    }

    #[test]
    fn gengauss_reduces_to_gaussian() {
        for &s2 in &[0.04, 1.0, 7.3] {
            let g = GaussianPrediction::new(0.4, s2);
            let gg = GenGaussianPrediction::from_gaussian(&g);
            assert_abs_diff_eq!(gg.variance(), s2, epsilon = 1e-10 * s2.max(1.0));
            for i in -40..=40 {
                let y = 0.4 + i as f64 * 0.1 * s2.sqrt();
                assert_abs_diff_eq!(gengauss_nll(&gg, y).unwrap(), gauss_nll(&g, y).unwrap(), epsilon = 1e-8);
                assert_abs_diff_eq!(gengauss_cdf(&gg, y).unwrap(), gauss_cdf(&g, y).unwrap(), epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn laplace_variance() {
        let lap = GenGaussianPrediction::new(0.0, 1.5, 1.0);
        assert_abs_diff_eq!(lap.variance(), 2.0 * 1.5 * 1.5, epsilon = 1e-10);
    }

    /// Composite Simpson rule on [μ−L, μ+L], split at μ where the density has a kink.
    fn integrate(p: &GenGaussianPrediction, half_width: f64, n: usize) -> f64 {
        let h = half_width / n as f64;
        let mut total = 0.0;
        for side in [-1.0, 1.0] {
            let f = |t: f64| p.pdf(p.mu + side * t).unwrap();
            let mut s = f(0.0) + f(half_width);
            for i in 1..n {
                s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            total += s * h / 3.0;
        }
        total
    }

    #[test]
    fn gengauss_density_integrates_to_one() {
        let mut rng = crate::numerics::Rng::new(11);
        for _ in 0..10 {
            let alpha = rng.uniform(0.3, 3.0);
            let beta = rng.uniform(0.8, 8.0);
            let p = GenGaussianPrediction::new(rng.uniform(-2.0, 2.0), alpha, beta);
            // tail mass beyond z = 40^(1/β) is P-complement at 40^... negligible for β ≥ 0.8
            let width = alpha * 60f64.powf(1.0 / beta);
            let mass = integrate(&p, width, 200_000);
            assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn gengauss_gradients_match_finite_differences() {
        let h = 1e-6;
        for &(a, b, y) in &[(0.7, 1.3, 0.9), (2.0, 4.0, -1.1), (1.1, 0.5, 0.3), (0.5, 2.0, 0.0)] {
            let p = GenGaussianPrediction::new(0.2, a, b);
            let (ga, gb) = gengauss_nll_grad(&p, y);
            let fa = (gengauss_nll(&GenGaussianPrediction::new(0.2, a + h, b), y).unwrap()
                - gengauss_nll(&GenGaussianPrediction::new(0.2, a - h, b), y).unwrap())
                / (2.0 * h);
            let fb = (gengauss_nll(&GenGaussianPrediction::new(0.2, a, b + h), y).unwrap()
                - gengauss_nll(&GenGaussianPrediction::new(0.2, a, b - h), y).unwrap())
                / (2.0 * h);
            assert_abs_diff_eq!(ga, fa, epsilon = 1e-6 * fa.abs().max(1.0));
            assert_abs_diff_eq!(gb, fb, epsilon = 1e-6 * fb.abs().max(1.0));
        }
    }

    #[test]
    fn mixture_examples() {
        let p = ensemble_mixture_moments(&[GaussianPrediction::new(0.0, 1.0), GaussianPrediction::new(2.0, 1.0)]).unwrap();
        assert_eq!(p.mu, 1.0);
        assert_eq!(p.sigma2, 3.0);
        let same = mixture_decomposition(&[GaussianPrediction::new(0.5, 0.2); 4]).unwrap();
        assert_eq!(same.epistemic, 0.0);
        assert_eq!(same.total(), 0.2);
        assert!(ensemble_mixture_moments(&[GaussianPrediction::new(0.0, 1.0)]).is_err());
    }

    #[test]
    fn mixture_arithmetic_progression() {
        // means a, a+d, …, a+(M−1)d have unbiased variance d²·M(M+1)/12
        for m in 2..9usize {
            let d = 0.3;
            let preds: Vec<_> = (0..m).map(|i| GaussianPrediction::new(1.0 + i as f64 * d, 0.5)).collect();
            let mm = mixture_decomposition(&preds).unwrap();
            let expected = d * d * (m * (m + 1)) as f64 / 12.0;
            assert_abs_diff_eq!(mm.epistemic, expected, epsilon = 1e-12);
        }
    }
}
