//! Row-wise augmentations and input perturbations in standardized feature space.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AugmentationKind {
    /// Additive N(0, σ²) on every feature.
    GaussNoise { sigma: f64 },
    /// Multiplies each feature by an independent U(lo, hi) factor.
    FeatureScaleJitter { lo: f64, hi: f64 },
    /// Zeroes (sets to the training mean) each feature with probability `p`.
    FeatureDropout { p: f64 },
    /// Negates the listed features; an empty list flips all of them.
    SignFlip {
        #[serde(default)]
        features: Vec<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct AugmentationSpec {
    #[serde(flatten)]
    pub kind: AugmentationKind,
    /// Probability that a given row receives this augmentation.
    #[serde(default = "one")]
    pub probability: f64,
}

fn one() -> f64 {
    1.0
}

impl AugmentationSpec {
    pub fn new(kind: AugmentationKind, probability: f64) -> Self {
        Self { kind, probability }
    }

    pub fn validate(&self, width: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.probability) {
            return Err(Error::Config(format!("augmentation probability {} not in [0,1]", self.probability)));
        }
        let ok = match &self.kind {
            AugmentationKind::GaussNoise { sigma } => *sigma >= 0.0,
            AugmentationKind::FeatureScaleJitter { lo, hi } => *lo <= *hi,
            AugmentationKind::FeatureDropout { p } => (0.0..=1.0).contains(p),
            AugmentationKind::SignFlip { features } => features.iter().all(|&f| f < width),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid augmentation parameters: {:?}", self.kind)))
        }
    }

    pub fn label(&self) -> String {
        match &self.kind {
            AugmentationKind::GaussNoise { sigma } => format!("gauss_noise({sigma})"),
            AugmentationKind::FeatureScaleJitter { lo, hi } => format!("feature_scale_jitter({lo},{hi})"),
            AugmentationKind::FeatureDropout { p } => format!("feature_dropout({p})"),
            AugmentationKind::SignFlip { features } if features.is_empty() => "sign_flip(all)".into(),
            AugmentationKind::SignFlip { features } => format!("sign_flip({features:?})"),
        }
    }

    fn apply_row(&self, row: &mut [f64], rng: &mut Rng) {
        match &self.kind {
            AugmentationKind::GaussNoise { sigma } => row.iter_mut().for_each(|v| *v += sigma * rng.normal()),
            AugmentationKind::FeatureScaleJitter { lo, hi } => row.iter_mut().for_each(|v| *v *= rng.uniform(*lo, *hi)),
            AugmentationKind::FeatureDropout { p } => row.iter_mut().for_each(|v| {
                if rng.bernoulli(*p) {
                    *v = 0.0;
                }
            }),
            AugmentationKind::SignFlip { features } => {
                if features.is_empty() {
                    row.iter_mut().for_each(|v| *v = -*v);
                } else {
                    for &f in features {
                        row[f] = -row[f];
                    }
                }
            }
        }
    }
}

/// Applies each augmentation in order; a row receives augmentation `a` with
/// probability `a.probability`.
pub fn augment(x: &Matrix, specs: &[AugmentationSpec], rng: &mut Rng) -> Matrix {
    let mut out = x.clone();
    if specs.is_empty() {
        return out;
    }
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        for spec in specs {
            if rng.bernoulli(spec.probability) {
                spec.apply_row(row, rng);
            }
        }
    }
    out
}

/// `x + σ·ε`, ε ~ N(0, 1), optionally clamped to `[lo, hi]`.
pub fn perturb(x: &Matrix, sigma: f64, clamp: Option<[f64; 2]>, rng: &mut Rng) -> Matrix {
    let noise = Matrix::from_vec(x.rows(), x.cols(), (0..x.rows() * x.cols()).map(|_| rng.normal()).collect())
        .expect("sized to x");
    perturb_with_noise(x, sigma, &noise, clamp)
}

/// Same as [`perturb`] with a caller-supplied standard-normal draw, so several
/// noise levels can share one draw.
pub fn perturb_with_noise(x: &Matrix, sigma: f64, noise: &Matrix, clamp: Option<[f64; 2]>) -> Matrix {
    let mut out = x.clone();
    for (v, e) in out.as_mut_slice().iter_mut().zip(noise.as_slice()) {
        *v += sigma * e;
        if let Some([lo, hi]) = clamp {
            *v = v.clamp(lo, hi);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct PerturbationSweep {
    pub sigmas: Vec<f64>,
    #[serde(default)]
    pub clamp_bounds: Option<[f64; 2]>,
}

impl Default for PerturbationSweep {
    /// The seven corruption levels 0.01 … 0.5, unclamped.
    fn default() -> Self {
        Self {
            sigmas: vec![0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5],
            clamp_bounds: None,
        }
    }
}

impl PerturbationSweep {
    pub fn validate(&self) -> Result<()> {
        if self.sigmas.is_empty() || self.sigmas.windows(2).any(|w| !(w[0] < w[1])) || self.sigmas[0] < 0.0 {
            return Err(Error::Config("perturbation sigmas must be nonnegative and strictly increasing".into()));
        }
        Ok(())
    }

    /// One perturbed copy of `x` per level, all sharing a single noise draw.
    pub fn apply(&self, x: &Matrix, rng: &mut Rng) -> Vec<Matrix> {
        let noise = Matrix::from_vec(x.rows(), x.cols(), (0..x.rows() * x.cols()).map(|_| rng.normal()).collect())
            .expect("sized to x");
        self.sigmas.iter().map(|&s| perturb_with_noise(x, s, &noise, self.clamp_bounds)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::population_variance;

    #[test]
    fn zero_sigma_is_identity() {
        let x = Matrix::from_rows(&[vec![0.2, -1.0], vec![3.0, 4.5]]).unwrap();
        assert_eq!(perturb(&x, 0.0, None, &mut Rng::new(1)), x);
    }

    #[test]
    fn clamp_saturates() {
        let x = Matrix::filled(50, 1, 1.0);
        let out = perturb(&x, 100.0, Some([0.0, 1.0]), &mut Rng::new(2));
        assert!(out.as_slice().iter().all(|&v| (0.0..=1.0).contains(&v)));
        let big = perturb_with_noise(&x, 5.0, &Matrix::filled(50, 1, 1.0), Some([0.0, 1.0]));
        assert!(big.as_slice().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn empirical_noise_std() {
        let x = Matrix::zeros(100_000, 1);
        let out = perturb(&x, 0.3, None, &mut Rng::new(3));
        let sd = population_variance(out.as_slice()).sqrt();
        assert!((sd - 0.3).abs() < 0.03 * 0.3, "sd {sd}");
    }

    #[test]
    fn sign_flip_and_dropout() {
        let x = Matrix::from_rows(&[vec![1.0, -2.0, 3.0]]).unwrap();
        let mut rng = Rng::new(0);
        let flip = AugmentationSpec::new(AugmentationKind::SignFlip { features: vec![1] }, 1.0);
        assert_eq!(augment(&x, &[flip], &mut rng).row(0), &[1.0, 2.0, 3.0]);
        let all = AugmentationSpec::new(AugmentationKind::SignFlip { features: vec![] }, 1.0);
        assert_eq!(augment(&x, &[all], &mut rng).row(0), &[-1.0, 2.0, -3.0]);
        let drop = AugmentationSpec::new(AugmentationKind::FeatureDropout { p: 1.0 }, 1.0);
        assert_eq!(augment(&x, &[drop], &mut rng).row(0), &[0.0, 0.0, 0.0]);
        let never = AugmentationSpec::new(AugmentationKind::GaussNoise { sigma: 1.0 }, 0.0);
        assert_eq!(augment(&x, &[never], &mut rng), x);
    }

    #[test]
    fn validation() {
        assert!(AugmentationSpec::new(AugmentationKind::GaussNoise { sigma: 0.1 }, 1.5).validate(2).is_err());
        assert!(AugmentationSpec::new(AugmentationKind::SignFlip { features: vec![4] }, 1.0).validate(2).is_err());
        assert!(PerturbationSweep { sigmas: vec![0.1, 0.1], clamp_bounds: None }.validate().is_err());
        assert!(PerturbationSweep::default().validate().is_ok());
    }

    #[test]
    fn spec_json_shape() {
        let s: AugmentationSpec = serde_json::from_str(r#"{"kind":"gauss_noise","sigma":0.5,"probability":0.5}"#).unwrap();
        assert_eq!(s, AugmentationSpec::new(AugmentationKind::GaussNoise { sigma: 0.5 }, 0.5));
    }
}
