//! Post-hoc variance estimation for frozen regressors.
//!
//! A base network `f` is trained with mean squared error and then frozen. An
//! auxiliary network `g` is fitted on a probe set by minimizing the Gaussian
//! negative log-likelihood with the residual `f(x) − y` held constant, so only
//! `g` receives gradients. `g` may see the input `x`, the frozen output `f(x)`,
//! or both.

pub mod base;
pub mod baselines;
pub mod data;
pub mod distributions;
pub mod experiments;
pub mod error;
pub mod metrics;
pub mod nn;
pub mod numerics;
pub mod posthoc;

pub use error::{Error, Result};
