//! Dense matrices, seeded random streams and special functions.

mod matrix;
mod rng;
mod special;

pub use matrix::Matrix;
pub use rng::{derive_seed, splitmix64, Rng, Stream};
pub use special::{
    digamma, ln_gamma, reg_lower_incomplete_gamma, reg_upper_incomplete_gamma, std_normal_cdf,
};

pub(crate) use special::ln_gamma_unchecked;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (denominator n).
pub fn population_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (denominator n − 1); 0 for fewer than two values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}
