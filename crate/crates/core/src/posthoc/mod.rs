//! Auxiliary variance networks fitted to a frozen base regressor.
//!
//! The auxiliary net `g` sees the standardized input, the base output (already
//! in standardized target units), or both. It is trained with the negative
//! log-likelihood where the base residual is a constant, so the base network is
//! only ever read.

mod diagnostics;
mod fit;
mod loss;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::data::ProbeManifest;
use crate::distributions::{GenGaussianPrediction, PredictiveDistribution, BETA_MAX, BETA_MIN};
use crate::error::{Error, Result};
use crate::base::BaseModel;
use crate::nn::{Activation, Mlp, MlpCheckpoint};
use crate::numerics::Matrix;

pub use diagnostics::{epistemic_diagnostics, EpistemicDiagnostics};
pub use fit::{fit_output_only_baseline, fit_posthoc};
pub use loss::{detached_gaussian_nll, detached_gengauss_nll};

/// Which signals the auxiliary network receives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum ConditioningMode {
    InputOnly,
    OutputOnly,
    Hybrid,
}

impl ConditioningMode {
    pub const ALL: [ConditioningMode; 3] = [Self::InputOnly, Self::OutputOnly, Self::Hybrid];

    /// Auxiliary input width for `d` features and `k` targets.
    pub fn width(self, d: usize, k: usize) -> usize {
        match self {
            Self::InputOnly => d,
            Self::OutputOnly => k,
            Self::Hybrid => d + k,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::InputOnly => "input_only",
            Self::OutputOnly => "output_only",
            Self::Hybrid => "hybrid",
        }
    }

    pub fn sees_output(self) -> bool {
        self != Self::InputOnly
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    #[default]
    Gaussian,
    #[serde(alias = "gg")]
    Gengauss,
}

/// Architecture of the auxiliary network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxConfig {
    pub mode: ConditioningMode,
    #[serde(default)]
    pub head: HeadKind,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    #[serde(default)]
    pub dropout_p: f64,
}

impl AuxConfig {
    pub fn new(mode: ConditioningMode) -> Self {
        Self {
            mode,
            head: HeadKind::Gaussian,
            hidden: vec![50, 50, 50],
            activation: Activation::Tanh,
            dropout_p: 0.0,
        }
    }

    pub fn with_head(mut self, head: HeadKind) -> Self {
        self.head = head;
        self
    }

    pub fn with_hidden(mut self, hidden: Vec<usize>) -> Self {
        self.hidden = hidden;
        self
    }
}

/// Per-channel head parameters in standardized target units.
#[derive(Clone, Debug, PartialEq)]
pub enum HeadOutput {
    Gaussian { variance: Matrix },
    Gengauss { alpha: Matrix, beta: Matrix },
}

impl HeadOutput {
    pub fn variance(&self) -> Matrix {
        match self {
            HeadOutput::Gaussian { variance } => variance.clone(),
            HeadOutput::Gengauss { alpha, beta } => {
                let data = alpha
                    .as_slice()
                    .iter()
                    .zip(beta.as_slice())
                    .map(|(&a, &b)| GenGaussianPrediction::new(0.0, a, b).variance())
                    .collect();
                Matrix::from_vec(alpha.rows(), alpha.cols(), data).expect("same shape as alpha")
            }
        }
    }

    /// Scales to original target units given per-channel target standard deviations.
    pub fn destandardize(&self, std: &[f64]) -> HeadOutput {
        let scale = |m: &Matrix, power: i32| {
            let mut out = m.clone();
            for r in 0..out.rows() {
                for (v, s) in out.row_mut(r).iter_mut().zip(std) {
                    *v *= s.powi(power);
                }
            }
            out
        };
        match self {
            HeadOutput::Gaussian { variance } => HeadOutput::Gaussian {
                variance: scale(variance, 2),
            },
            HeadOutput::Gengauss { alpha, beta } => HeadOutput::Gengauss {
                alpha: scale(alpha, 1),
                beta: beta.clone(),
            },
        }
    }
}

/// A frozen base network together with its fitted auxiliary network.
#[derive(Clone, Debug)]
pub struct PosthocModel {
    base: BaseModel,
    aux: Mlp,
    mode: ConditioningMode,
    head: HeadKind,
    base_hash: String,
}

impl PosthocModel {
    pub(crate) fn new(base: BaseModel, aux: Mlp, mode: ConditioningMode, head: HeadKind) -> Result<Self> {
        let d = base.input_width();
        let k = base.output_width();
        if aux.config().input_width() != mode.width(d, k) {
            return Err(Error::shape("PosthocModel", mode.width(d, k), aux.config().input_width()));
        }
        let outputs = match head {
            HeadKind::Gaussian => k,
            HeadKind::Gengauss => 2 * k,
        };
        if aux.config().output_width() != outputs {
            return Err(Error::shape("PosthocModel head", outputs, aux.config().output_width()));
        }
        let base_hash = base.hash();
        Ok(Self {
            base,
            aux,
            mode,
            head,
            base_hash,
        })
    }

    pub fn base(&self) -> &BaseModel {
        &self.base
    }

    pub fn aux(&self) -> &Mlp {
        &self.aux
    }

    pub fn mode(&self) -> ConditioningMode {
        self.mode
    }

    pub fn head(&self) -> HeadKind {
        self.head
    }

    pub fn base_hash(&self) -> &str {
        &self.base_hash
    }

    /// Base prediction `f(x)` in standardized target units.
    pub fn predict_mean(&self, x: &Matrix) -> Result<Matrix> {
        self.base.predict(x)
    }

    /// Head parameters for standardized inputs `x`.
    pub fn predict_head(&self, x: &Matrix) -> Result<HeadOutput> {
        let f = self.base.predict(x)?;
        self.score(x, &f)
    }

    /// Predicted variance per row and target channel, standardized units.
    pub fn predict_variance(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self.predict_head(x)?.variance())
    }

    /// `g(x_input, f(x_for_base))` with the two sources decoupled. For the
    /// output-only mode `x_input` is not read.
    pub fn predict_counterfactual(&self, x_input: &Matrix, x_for_base: &Matrix) -> Result<Matrix> {
        if self.mode == ConditioningMode::InputOnly {
            return Err(Error::Usage("counterfactual evaluation needs a model that sees f(x)".into()));
        }
        if x_input.rows() != x_for_base.rows() {
            return Err(Error::shape("predict_counterfactual rows", x_input.rows(), x_for_base.rows()));
        }
        let f = self.base.predict(x_for_base)?;
        Ok(self.score(x_input, &f)?.variance())
    }

    /// Evaluates the auxiliary network on explicit conditioning sources.
    pub fn score(&self, x: &Matrix, f: &Matrix) -> Result<HeadOutput> {
        let input = self.aux_input(x, f)?;
        let out = self.aux.predict(&input)?;
        Ok(split_head(self.head, &out, self.base.output_width()))
    }

    pub(crate) fn aux_input(&self, x: &Matrix, f: &Matrix) -> Result<Matrix> {
        aux_input(self.mode, x, f)
    }

    pub fn to_checkpoint(&self, probe: Option<ProbeManifest>) -> PosthocCheckpoint {
        PosthocCheckpoint {
            base_hash: self.base_hash.clone(),
            aux: MlpCheckpoint::from_net(&self.aux, 0, None, None),
            mode: self.mode,
            head: self.head,
            probe,
        }
    }
}

pub(crate) fn aux_input(mode: ConditioningMode, x: &Matrix, f: &Matrix) -> Result<Matrix> {
    match mode {
        ConditioningMode::InputOnly => Ok(x.clone()),
        ConditioningMode::OutputOnly => Ok(f.clone()),
        ConditioningMode::Hybrid => x.hcat(f),
    }
}

/// Splits raw auxiliary outputs into head parameters; β is clamped.
pub(crate) fn split_head(head: HeadKind, out: &Matrix, k: usize) -> HeadOutput {
    match head {
        HeadKind::Gaussian => HeadOutput::Gaussian { variance: out.clone() },
        HeadKind::Gengauss => {
            let alpha = out.select_cols(&(0..k).collect::<Vec<_>>());
            let beta = out
                .select_cols(&(k..2 * k).collect::<Vec<_>>())
                .map(|b| b.clamp(BETA_MIN, BETA_MAX));
            HeadOutput::Gengauss { alpha, beta }
        }
    }
}

/// Serialized post-hoc model. The base network is referenced by hash only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosthocCheckpoint {
    pub base_hash: String,
    pub aux: MlpCheckpoint,
    pub mode: ConditioningMode,
    pub head: HeadKind,
    #[serde(default)]
    pub probe: Option<ProbeManifest>,
}

impl PosthocCheckpoint {
    /// Reattaches a base network. A base whose hash differs from the recorded
    /// one is refused unless `allow_mismatch` is set.
    pub fn into_model(self, base: BaseModel, allow_mismatch: bool) -> Result<PosthocModel> {
        let found = base.hash();
        if found != self.base_hash && !allow_mismatch {
            return Err(Error::BaseHashMismatch {
                expected: self.base_hash,
                found,
            });
        }
        PosthocModel::new(base, self.aux.to_net()?, self.mode, self.head)
    }
}
