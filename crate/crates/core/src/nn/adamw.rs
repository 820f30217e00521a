use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::ParameterStore;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct AdamWConfig {
    pub lr: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub weight_decay: f64,
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

impl AdamWConfig {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        Self {
            lr,
            weight_decay,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lr > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0
            && self.weight_decay >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid AdamW settings: {self:?}")))
        }
    }
}

/// AdamW with decoupled weight decay and bias-corrected moments.
#[derive(Clone, Debug)]
pub struct AdamW {
    config: AdamWConfig,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamW {
    pub fn new(config: AdamWConfig) -> Self {
        Self {
            config,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn config(&self) -> &AdamWConfig {
        &self.config
    }

    /// Applies one update from the gradients currently held in `store` and
    /// increments its step counter.
    pub fn step(&mut self, store: &mut ParameterStore) {
        if self.m.len() != store.params.len() {
            self.m = store.params.iter().map(|p| vec![0.0; p.value.as_slice().len()]).collect();
            self.v = self.m.clone();
        }
        store.step += 1;
        let t = store.step as i32;
        let c = &self.config;
        let bc1 = 1.0 - c.beta1.powi(t);
        let bc2 = 1.0 - c.beta2.powi(t);
        let decay = 1.0 - c.lr * c.weight_decay;
        for ((p, m), v) in store.params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            let grads = p.grad.as_slice().to_vec();
            for (((theta, g), mi), vi) in p.value.as_mut_slice().iter_mut().zip(grads).zip(m.iter_mut()).zip(v.iter_mut()) {
                *theta *= decay;
                *mi = c.beta1 * *mi + (1.0 - c.beta1) * g;
                *vi = c.beta2 * *vi + (1.0 - c.beta2) * g * g;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *theta -= c.lr * m_hat / (v_hat.sqrt() + c.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Param;
    use crate::numerics::Matrix;
    use approx::assert_abs_diff_eq;

    fn scalar_store(theta: f64, grad: f64) -> ParameterStore {
        ParameterStore {
            params: vec![Param {
                name: "w".into(),
                value: Matrix::filled(1, 1, theta),
                grad: Matrix::filled(1, 1, grad),
            }],
            step: 0,
        }
    }

    #[test]
    fn first_step_matches_hand_evaluation() {
        // decay: 1·(1 − 0.1·0.01) = 0.999; m̂ = v̂ = 1; step = 0.1/(1 + 1e-8)
        let mut s = scalar_store(1.0, 1.0);
        let mut opt = AdamW::new(AdamWConfig {
            lr: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        });
        opt.step(&mut s);
        let expected = 0.999 - 0.1 / (1.0 + 1e-8);
        assert_abs_diff_eq!(s.params[0].value.get(0, 0), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(s.params[0].value.get(0, 0), 0.899, epsilon = 1e-6);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn zero_gradient_no_decay_leaves_params() {
        let mut s = scalar_store(2.5, 0.0);
        let mut opt = AdamW::new(AdamWConfig::new(0.1, 0.0));
        for _ in 0..5 {
            opt.step(&mut s);
        }
        assert_eq!(s.params[0].value.get(0, 0), 2.5);
    }

    #[test]
    fn pure_decoupled_decay() {
        let mut s = scalar_store(3.0, 0.0);
        let mut opt = AdamW::new(AdamWConfig::new(0.05, 0.2));
        opt.step(&mut s);
        assert_abs_diff_eq!(s.params[0].value.get(0, 0), 3.0 * (1.0 - 0.05 * 0.2), epsilon = 1e-15);
    }
}
