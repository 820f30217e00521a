use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::distributions::VARIANCE_FLOOR;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
        }
    }
}

/// Output-channel transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadActivation {
    Identity,
    /// `softplus(z) + VARIANCE_FLOOR`, strictly positive.
    SoftplusPositive,
}

#[inline]
pub(crate) fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl HeadActivation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            HeadActivation::Identity => z,
            HeadActivation::SoftplusPositive => softplus(z) + VARIANCE_FLOOR,
        }
    }

    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            HeadActivation::Identity => 1.0,
            HeadActivation::SoftplusPositive => sigmoid(z),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    /// Input width, hidden widths, output width.
    pub layer_widths: Vec<usize>,
    pub activation: Activation,
    /// One entry per output channel.
    pub head_activations: Vec<HeadActivation>,
    #[serde(default)]
    pub dropout_p: f64,
}

impl MlpConfig {
    /// Regression net with identity heads.
    pub fn regression(input: usize, hidden: &[usize], output: usize, activation: Activation) -> Self {
        let mut layer_widths = vec![input];
        layer_widths.extend_from_slice(hidden);
        layer_widths.push(output);
        Self {
            layer_widths,
            activation,
            head_activations: vec![HeadActivation::Identity; output],
            dropout_p: 0.0,
        }
    }

    pub fn with_heads(mut self, heads: Vec<HeadActivation>) -> Self {
        self.head_activations = heads;
        self
    }

    pub fn with_dropout(mut self, p: f64) -> Self {
        self.dropout_p = p;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_widths.len() < 2 {
            return Err(Error::Config("an MLP needs at least input and output widths".into()));
        }
        if self.layer_widths.contains(&0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        if self.head_activations.len() != self.output_width() {
            return Err(Error::Config(format!(
                "{} head activations for {} outputs",
                self.head_activations.len(),
                self.output_width()
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::Config(format!("dropout_p must be in [0,1), got {}", self.dropout_p)));
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.layer_widths.last().expect("validated config")
    }

    /// Number of affine layers.
    pub fn depth(&self) -> usize {
        self.layer_widths.len() - 1
    }
}

/// A named weight array with its gradient slot.
#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Matrix,
    pub grad: Matrix,
}

/// Layer `l` owns `W{l}` (fan_in × fan_out) at index `2l` and `b{l}` (1 × fan_out) at `2l + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterStore {
    pub params: Vec<Param>,
    pub step: u64,
}

impl ParameterStore {
    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.as_mut_slice().fill(0.0);
        }
    }

    pub fn get(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn num_values(&self) -> usize {
        self.params.iter().map(|p| p.value.as_slice().len()).sum()
    }

    fn weight(&self, layer: usize) -> &Matrix {
        &self.params[2 * layer].value
    }

    fn bias(&self, layer: usize) -> &[f64] {
        self.params[2 * layer + 1].value.as_slice()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Clone, Debug)]
struct LayerCache {
    input: Matrix,
    pre: Matrix,
}

#[derive(Clone, Debug)]
struct ForwardCache {
    layers: Vec<LayerCache>,
    /// Inverted-dropout multipliers applied after each hidden activation.
    masks: Vec<Option<Matrix>>,
}

/// Fully connected network with analytic backpropagation.
#[derive(Clone, Debug)]
pub struct Mlp {
    config: MlpConfig,
    store: ParameterStore,
    cache: Option<ForwardCache>,
}

impl Mlp {
    /// Kaiming-uniform (relu) or Xavier-uniform (tanh) weights, zero biases.
    pub fn new(config: MlpConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let mut params = Vec::with_capacity(2 * config.depth());
        for l in 0..config.depth() {
            let (fan_in, fan_out) = (config.layer_widths[l], config.layer_widths[l + 1]);
            let bound = match config.activation {
                Activation::Relu => (6.0 / fan_in as f64).sqrt(),
                Activation::Tanh => (6.0 / (fan_in + fan_out) as f64).sqrt(),
            };
            let w: Vec<f64> = (0..fan_in * fan_out).map(|_| rng.uniform(-bound, bound)).collect();
            params.push(Param {
                name: format!("W{l}"),
                value: Matrix::from_vec(fan_in, fan_out, w)?,
                grad: Matrix::zeros(fan_in, fan_out),
            });
            params.push(Param {
                name: format!("b{l}"),
                value: Matrix::zeros(1, fan_out),
                grad: Matrix::zeros(1, fan_out),
            });
        }
        Ok(Self {
            config,
            store: ParameterStore { params, step: 0 },
            cache: None,
        })
    }

    /// All weights and biases zero.
    pub fn zeroed(config: MlpConfig) -> Result<Self> {
        let mut net = Self::new(config, &mut Rng::new(0))?;
        for p in &mut net.store.params {
            p.value.as_mut_slice().fill(0.0);
        }
        Ok(net)
    }

    pub(crate) fn from_parts(config: MlpConfig, store: ParameterStore) -> Result<Self> {
        config.validate()?;
        if store.params.len() != 2 * config.depth() {
            return Err(Error::shape("Mlp::from_parts", 2 * config.depth(), store.params.len()));
        }
        for l in 0..config.depth() {
            let (fi, fo) = (config.layer_widths[l], config.layer_widths[l + 1]);
            let w = &store.params[2 * l].value;
            let b = &store.params[2 * l + 1].value;
            if w.shape() != (fi, fo) || b.shape() != (1, fo) {
                return Err(Error::shape(
                    "Mlp::from_parts",
                    format!("W{l} {fi}x{fo}, b{l} 1x{fo}"),
                    format!("{:?}, {:?}", w.shape(), b.shape()),
                ));
            }
        }
        Ok(Self {
            config,
            store,
            cache: None,
        })
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn params(&self) -> &ParameterStore {
        &self.store
    }

    pub fn params_mut(&mut self) -> &mut ParameterStore {
        &mut self.store
    }

    pub fn zero_grad(&mut self) {
        self.store.zero_grad();
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.config.input_width() {
            return Err(Error::shape("Mlp::forward", self.config.input_width(), x.cols()));
        }
        Ok(())
    }

    fn run(&self, x: &Matrix, mut dropout: Option<&mut Rng>, keep_cache: bool) -> Result<(Matrix, Option<ForwardCache>)> {
        self.check_input(x)?;
        let depth = self.config.depth();
        let p = self.config.dropout_p;
        let mut layers = Vec::with_capacity(if keep_cache { depth } else { 0 });
        let mut masks = Vec::with_capacity(depth);
        let mut h = x.clone();
        for l in 0..depth {
            let mut z = h.matmul(self.store.weight(l))?;
            z.add_row_broadcast(self.store.bias(l))?;
            if l + 1 == depth {
                let heads = &self.config.head_activations;
                let mut out = z.clone();
                for r in 0..out.rows() {
                    for (v, head) in out.row_mut(r).iter_mut().zip(heads) {
                        *v = head.apply(*v);
                    }
                }
                if keep_cache {
                    layers.push(LayerCache { input: h, pre: z });
                }
                let cache = keep_cache.then_some(ForwardCache { layers, masks });
                return Ok((out, cache));
            }
            let act = self.config.activation;
            let mut a = z.map(|v| act.apply(v));
            let mask = match dropout.as_deref_mut() {
                Some(rng) if p > 0.0 => {
                    let scale = 1.0 / (1.0 - p);
                    let m: Vec<f64> = (0..a.as_slice().len())
                        .map(|_| if rng.bernoulli(p) { 0.0 } else { scale })
                        .collect();
                    let m = Matrix::from_vec(a.rows(), a.cols(), m)?;
                    for (v, s) in a.as_mut_slice().iter_mut().zip(m.as_slice()) {
                        *v *= s;
                    }
                    Some(m)
                }
                _ => None,
            };
            masks.push(mask);
            if keep_cache {
                layers.push(LayerCache { input: h, pre: z });
            }
            h = a;
        }
        unreachable!("depth >= 1 by validation")
    }

    /// Forward pass that caches activations for [`Mlp::backward`]. Dropout is
    /// active only in [`Mode::Train`].
    pub fn forward(&mut self, x: &Matrix, mode: Mode, rng: &mut Rng) -> Result<Matrix> {
        let dropout = match mode {
            Mode::Train => Some(rng),
            Mode::Eval => None,
        };
        let (out, cache) = self.run(x, dropout, true)?;
        self.cache = cache;
        Ok(out)
    }

    /// Deterministic eval-mode forward pass; leaves any cache untouched.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self.run(x, None, false)?.0)
    }

    /// Accumulates d(loss)/d(params) given d(loss)/d(outputs) for the batch of
    /// the most recent [`Mlp::forward`]. The cache is consumed.
    pub fn backward(&mut self, upstream: &Matrix) -> Result<()> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| Error::Usage("backward called without a cached forward pass".into()))?;
        let out_cache = cache.layers.last().expect("non-empty cache");
        if upstream.shape() != out_cache.pre.shape() {
            return Err(Error::shape(
                "Mlp::backward",
                format!("{:?}", out_cache.pre.shape()),
                format!("{:?}", upstream.shape()),
            ));
        }
        let depth = self.config.depth();
        let mut g = upstream.clone();
        let heads = &self.config.head_activations;
        for r in 0..g.rows() {
            let pre = out_cache.pre.row(r);
            for ((gv, head), &z) in g.row_mut(r).iter_mut().zip(heads).zip(pre) {
                *gv *= head.derivative(z);
            }
        }
        for l in (0..depth).rev() {
            let lc = &cache.layers[l];
            let gw = lc.input.t_matmul(&g)?;
            let gb = g.sum_rows();
            {
                let pw = &mut self.store.params[2 * l].grad;
                for (a, b) in pw.as_mut_slice().iter_mut().zip(gw.as_slice()) {
                    *a += b;
                }
                let pb = &mut self.store.params[2 * l + 1].grad;
                for (a, b) in pb.as_mut_slice().iter_mut().zip(&gb) {
                    *a += b;
                }
            }
            if l == 0 {
                break;
            }
            let mut gh = g.matmul_t(self.store.weight(l))?;
            if let Some(mask) = &cache.masks[l - 1] {
                for (v, m) in gh.as_mut_slice().iter_mut().zip(mask.as_slice()) {
                    *v *= m;
                }
            }
            let act = self.config.activation;
            let pre = &cache.layers[l - 1].pre;
            for (v, &z) in gh.as_mut_slice().iter_mut().zip(pre.as_slice()) {
                *v *= act.derivative(z);
            }
            g = gh;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn net(widths: &[usize], act: Activation, heads: Vec<HeadActivation>, seed: u64) -> Mlp {
        let cfg = MlpConfig {
            layer_widths: widths.to_vec(),
            activation: act,
            head_activations: heads,
            dropout_p: 0.0,
        };
        Mlp::new(cfg, &mut Rng::new(seed)).unwrap()
    }

    #[test]
    fn zero_weight_net_outputs() {
        let cfg = MlpConfig::regression(3, &[4, 4], 2, Activation::Relu)
            .with_heads(vec![HeadActivation::Identity, HeadActivation::SoftplusPositive]);
        let net = Mlp::zeroed(cfg).unwrap();
        let x = Matrix::from_rows(&[vec![1.0, -2.0, 0.5], vec![3.0, 0.0, 1.0]]).unwrap();
        let y = net.predict(&x).unwrap();
        for r in 0..2 {
            assert_eq!(y.get(r, 0), 0.0);
            assert_abs_diff_eq!(y.get(r, 1), 2f64.ln(), epsilon = 2e-6);
            assert!(y.get(r, 1) > 0.0);
        }
    }

    #[test]
    fn eval_mode_is_deterministic() {
        let mut n = net(&[2, 8, 1], Activation::Tanh, vec![HeadActivation::Identity], 1);
        let cfg = n.config().clone().with_dropout(0.5);
        n = Mlp::from_parts(cfg, n.params().clone()).unwrap();
        let x = Matrix::from_rows(&[vec![0.3, -1.0], vec![1.5, 2.0]]).unwrap();
        let mut rng = Rng::new(9);
        let a = n.forward(&x, Mode::Eval, &mut rng).unwrap();
        let b = n.forward(&x, Mode::Eval, &mut rng).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, n.predict(&x).unwrap());
    }

    #[test]
    fn single_linear_layer_mse_gradient() {
        // ŷ = w·x + b, loss = (ŷ − y)², grad_W = 2(ŷ − y) x
        let mut n = net(&[2, 1], Activation::Relu, vec![HeadActivation::Identity], 4);
        let x = Matrix::from_rows(&[vec![0.7, -1.2]]).unwrap();
        let y = 0.4;
        let out = n.forward(&x, Mode::Train, &mut Rng::new(0)).unwrap();
        let resid = out.get(0, 0) - y;
        n.backward(&Matrix::from_rows(&[vec![2.0 * resid]]).unwrap()).unwrap();
        let gw = &n.params().get("W0").unwrap().grad;
        assert_abs_diff_eq!(gw.get(0, 0), 2.0 * resid * 0.7, epsilon = 1e-14);
        assert_abs_diff_eq!(gw.get(1, 0), 2.0 * resid * -1.2, epsilon = 1e-14);
        assert_abs_diff_eq!(n.params().get("b0").unwrap().grad.get(0, 0), 2.0 * resid, epsilon = 1e-14);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut n = net(&[3, 5, 2], Activation::Tanh, vec![HeadActivation::Identity; 2], 2);
        let x = Matrix::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        n.forward(&x, Mode::Train, &mut Rng::new(0)).unwrap();
        n.backward(&Matrix::zeros(1, 2)).unwrap();
        assert!(n.params().params.iter().all(|p| p.grad.as_slice().iter().all(|&g| g == 0.0)));
    }

    #[test]
    fn backward_without_forward_is_usage_error() {
        let mut n = net(&[1, 1], Activation::Relu, vec![HeadActivation::Identity], 0);
        assert!(matches!(n.backward(&Matrix::zeros(1, 1)), Err(Error::Usage(_))));
        let x = Matrix::zeros(2, 1);
        n.forward(&x, Mode::Train, &mut Rng::new(0)).unwrap();
        n.backward(&Matrix::zeros(2, 1)).unwrap();
        // cache consumed
        assert!(matches!(n.backward(&Matrix::zeros(2, 1)), Err(Error::Usage(_))));
    }

    #[test]
    fn zero_grad_clears_everything() {
        let mut n = net(&[2, 3, 1], Activation::Relu, vec![HeadActivation::Identity], 5);
        let x = Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        n.forward(&x, Mode::Train, &mut Rng::new(0)).unwrap();
        n.backward(&Matrix::filled(1, 1, 1.0)).unwrap();
        n.zero_grad();
        assert!(n.params().params.iter().all(|p| p.grad.as_slice().iter().all(|&g| g == 0.0)));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let n = net(&[3, 2], Activation::Relu, vec![HeadActivation::Identity; 2], 0);
        assert!(matches!(n.predict(&Matrix::zeros(1, 2)), Err(Error::Shape { .. })));
    }

    #[test]
    fn dropout_statistics_and_expectation() {
        // one hidden relu layer with strictly positive pre-activations is linear,
        // so averaging train-mode outputs recovers the eval output
        let p = 0.3;
        let cfg = MlpConfig::regression(1, &[50], 1, Activation::Relu).with_dropout(p);
        let mut n = Mlp::zeroed(cfg).unwrap();
        {
            let s = n.params_mut();
            s.params[0].value.as_mut_slice().fill(1.0);
            s.params[1].value.as_mut_slice().fill(0.5);
            s.params[2].value.as_mut_slice().fill(0.02);
        }
        let x = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let eval = n.predict(&x).unwrap().get(0, 0);
        let mut rng = Rng::new(11);
        let trials = 20_000;
        let mut sum = 0.0;
        let mut dropped = 0usize;
        for _ in 0..trials {
            let out = n.forward(&x, Mode::Train, &mut rng).unwrap();
            sum += out.get(0, 0);
            let mask = n.cache.as_ref().unwrap().masks[0].as_ref().unwrap();
            dropped += mask.as_slice().iter().filter(|&&m| m == 0.0).count();
            for &m in mask.as_slice() {
                assert!(m == 0.0 || (m - 1.0 / (1.0 - p)).abs() < 1e-15);
            }
        }
        let drop_rate = dropped as f64 / (trials * 50) as f64;
        assert!((drop_rate - p).abs() < 0.005, "drop rate {drop_rate}");
        assert!((sum / trials as f64 - eval).abs() < 0.01 * eval.abs());
    }
}
