//! Fits all three conditioning modes on a frozen toy regressor and compares
//! the predicted variance with the generating noise.
//!
//! ```text
//! cargo run --release --example toy_recovery
//! ```

use iocue::base::train_base;
use iocue::data::{gen_toy, make_probe, ProbeConfig, Split, ToySpec};
use iocue::experiments::{posthoc_predictive, truth_comparison};
use iocue::nn::{Activation, AdamWConfig, MlpConfig, TrainSchedule};
use iocue::numerics::Rng;
use iocue::posthoc::{fit_posthoc, AuxConfig, ConditioningMode};

fn main() -> iocue::Result<()> {
    let data = gen_toy(&ToySpec::default())?;
    let sched = TrainSchedule {
        max_epochs: 400,
        batch_size: 128,
        early_stop_patience: 40,
        ..TrainSchedule::default()
    };
    let cfg = MlpConfig::regression(1, &[100, 100, 100], 1, Activation::Relu);
    let (base, traces, _) = train_base(&data, &cfg, 1, &[], &sched, &AdamWConfig::new(3e-3, 0.0), &Rng::new(1))?;
    println!("base trained for {} updates", traces[0].total_steps);

    let probe = make_probe(&data, &ProbeConfig::full(), sched.batch_size)?;
    let budget = sched.fixed_budget(traces[0].total_steps / 2);
    for mode in ConditioningMode::ALL {
        let aux = AuxConfig::new(mode).with_hidden(vec![50, 50, 50]);
        let (model, _) = fit_posthoc(&base, &probe, &aux, &budget, &AdamWConfig::new(1e-3, 0.01), &Rng::new(2))?;
        let pred = posthoc_predictive(&model, &data, &data.x(Split::Test))?;
        let scores = pred.scores(data.raw_y(Split::Test).as_slice())?;
        let truth = truth_comparison(&data, &pred.variances())?.expect("toy data carries its noise");
        println!(
            "{:<12} nll {:.4} (oracle {:.4})  ece {:.4}  corr(var, true var) {:.3}",
            mode.name(),
            scores.nll,
            truth.oracle_nll,
            scores.ece,
            truth.variance_pearson
        );
    }
    Ok(())
}
