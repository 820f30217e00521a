//! Trains a small Gaussian deep ensemble and splits its predictive variance
//! into aleatoric and epistemic parts inside and outside the training range.
//!
//! ```text
//! cargo run --release --example deep_ensemble
//! ```

use iocue::baselines::train_ensemble;
use iocue::data::{gen_toy, ToySpec};
use iocue::nn::{Activation, AdamWConfig, MlpConfig, TrainSchedule};
use iocue::numerics::{Matrix, Rng};

fn main() -> iocue::Result<()> {
    let data = gen_toy(&ToySpec::default())?;
    let cfg = MlpConfig::regression(1, &[50, 50], 1, Activation::Relu);
    let sched = TrainSchedule {
        max_epochs: 200,
        batch_size: 128,
        early_stop_patience: 20,
        ..TrainSchedule::default()
    };
    let (ensemble, _) = train_ensemble(&data, &cfg, 5, &sched, &AdamWConfig::new(3e-3, 0.0), &Rng::new(3))?;

    let xs: Vec<f64> = (-12..=12).map(|i| i as f64 * 0.5).collect();
    let raw = Matrix::from_vec(xs.len(), 1, xs.clone())?;
    let pred = ensemble.predict(&data.feature_scaler().transform(&raw)?)?;
    let aleatoric = data.target_scaler().inverse_variance(&pred.aleatoric)?;
    let epistemic = data.target_scaler().inverse_variance(&pred.epistemic)?;
    println!("{:>6} {:>10} {:>10}", "x", "aleatoric", "epistemic");
    for (i, x) in xs.iter().enumerate() {
        let mark = if x.abs() > 4.0 { "  outside" } else { "" };
        println!("{x:>6.1} {:>10.4} {:>10.4}{mark}", aleatoric.get(i, 0), epistemic.get(i, 0));
    }
    Ok(())
}
