//! One-dimensional heteroscedastic toy regression.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::data::{DatasetTable, GroundTruth, Split};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng, Stream};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeanFn {
    /// μ(x) = x·sin(x)
    XSinX,
    Linear { slope: f64, intercept: f64 },
}

impl MeanFn {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            MeanFn::XSinX => x * x.sin(),
            MeanFn::Linear { slope, intercept } => slope * x + intercept,
        }
    }
}

/// Noise standard deviation as a function of x.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseFn {
    Zero,
    Constant { sigma: f64 },
    /// Linear in x across the range: `at_lo` at the left end, `at_hi` at the right end.
    LinearRamp { at_lo: f64, at_hi: f64 },
    /// Symmetric ramp in |x|: `at_zero` at the origin, `at_edge` at max(|lo|, |hi|).
    AbsRamp { at_zero: f64, at_edge: f64 },
}

/// Floor applied to extrapolated noise levels outside the generating interval.
const MIN_SIGMA: f64 = 1e-3;

impl NoiseFn {
    pub fn eval(&self, x: f64, range: [f64; 2]) -> f64 {
        match *self {
            NoiseFn::Zero => 0.0,
            NoiseFn::Constant { sigma } => sigma,
            NoiseFn::LinearRamp { at_lo, at_hi } => {
                (at_lo + (at_hi - at_lo) * (x - range[0]) / (range[1] - range[0])).max(MIN_SIGMA)
            }
            NoiseFn::AbsRamp { at_zero, at_edge } => {
                let edge = range[0].abs().max(range[1].abs());
                (at_zero + (at_edge - at_zero) * x.abs() / edge).max(MIN_SIGMA)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default)]
pub struct ToySpec {
    pub n_train: usize,
    pub n_test: usize,
    pub x_range: [f64; 2],
    pub mean_fn: MeanFn,
    pub noise_fn: NoiseFn,
    pub seed: u64,
    /// Fraction of the `n_train` rows held out for early stopping.
    #[serde(default = "default_val_fraction")]
    pub val_fraction: f64,
}

fn default_val_fraction() -> f64 {
    0.1
}

impl Default for ToySpec {
    fn default() -> Self {
        Self {
            n_train: 2000,
            n_test: 1000,
            x_range: [-4.0, 4.0],
            mean_fn: MeanFn::XSinX,
            noise_fn: NoiseFn::LinearRamp { at_lo: 0.1, at_hi: 0.4 },
            seed: 0,
            val_fraction: 0.1,
        }
    }
}

impl ToySpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.x_range[0] < self.x_range[1]) {
            return Err(Error::Config(format!("toy x_range must satisfy lo < hi, got {:?}", self.x_range)));
        }
        if self.n_train == 0 || self.n_test == 0 {
            return Err(Error::Config("toy sample counts must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::Config("val_fraction must be in [0,1)".into()));
        }
        Ok(())
    }

    pub fn sigma(&self, x: f64) -> f64 {
        self.noise_fn.eval(x, self.x_range)
    }

    pub fn mean(&self, x: f64) -> f64 {
        self.mean_fn.eval(x)
    }

    /// Draws `n` raw (x, y) pairs with x uniform on `interval`.
    pub fn sample(&self, n: usize, interval: [f64; 2], rng: &mut Rng) -> (Vec<f64>, Vec<f64>) {
        let xs: Vec<f64> = (0..n).map(|_| rng.uniform(interval[0], interval[1])).collect();
        let ys = xs
            .iter()
            .map(|&x| {
                let s = self.sigma(x);
                let eps = rng.normal();
                self.mean(x) + if s > 0.0 { s * eps } else { 0.0 }
            })
            .collect();
        (xs, ys)
    }

    /// Out-of-distribution inputs: `n` points uniform on the two flanking
    /// intervals `[lo − w, lo) ∪ (hi, hi + w]`, `w = width_fraction·(hi − lo)`.
    pub fn ood_inputs(&self, n: usize, width_fraction: f64, rng: &mut Rng) -> Vec<f64> {
        let [lo, hi] = self.x_range;
        let w = width_fraction * (hi - lo);
        (0..n)
            .map(|_| {
                let u = rng.uniform(0.0, w);
                if rng.bernoulli(0.5) {
                    hi + u
                } else {
                    lo - u
                }
            })
            .collect()
    }
}

/// Generates the toy table: `n_train` rows split train/val plus `n_test` test
/// rows, with the generating (μ, σ) kept as ground truth.
pub fn gen_toy(spec: &ToySpec) -> Result<DatasetTable> {
    spec.validate()?;
    let root = Rng::new(spec.seed);
    let mut data_rng = root.fork(Stream::Data);
    let n = spec.n_train + spec.n_test;
    let (xs, ys) = spec.sample(n, spec.x_range, &mut data_rng);
    let n_val = (spec.val_fraction * spec.n_train as f64).floor() as usize;
    let mut split = vec![Split::Train; spec.n_train];
    let mut split_rng = root.fork(Stream::Split);
    for &i in split_rng.sample_indices(spec.n_train, n_val).iter() {
        split[i] = Split::Val;
    }
    split.extend(std::iter::repeat_n(Split::Test, spec.n_test));
    let truth = GroundTruth {
        mean: xs.iter().map(|&x| spec.mean(x)).collect(),
        sigma: xs.iter().map(|&x| spec.sigma(x)).collect(),
    };
    DatasetTable::new(
        "toy",
        Matrix::column_vector(xs),
        Matrix::column_vector(ys),
        split,
        vec!["x".into()],
        vec!["y".into()],
    )?
    .with_truth(truth)
}
