//! Fits the generalized Gaussian head on heavy-tailed residuals and compares
//! it with the Gaussian head.
//!
//! ```text
//! cargo run --release --example generalized_gaussian
//! ```

use iocue::base::BaseModel;
use iocue::data::{make_probe, DatasetTable, ProbeConfig, Split};
use iocue::distributions::{gengauss_cdf, GenGaussianPrediction};
use iocue::metrics::{default_levels, ece, gaussians_from, gengaussians_from, mean_nll};
use iocue::nn::{Activation, AdamWConfig, Mlp, MlpConfig, TrainSchedule};
use iocue::numerics::{Matrix, Rng};
use iocue::posthoc::{fit_posthoc, AuxConfig, ConditioningMode, HeadKind, HeadOutput};

fn main() -> iocue::Result<()> {
    // Laplace noise around a zero regressor: shape 1 is the right answer.
    let mut rng = Rng::new(11);
    let n = 6000;
    let x = Matrix::from_vec(n, 1, (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect())?;
    let y = Matrix::from_vec(
        n,
        1,
        (0..n)
            .map(|_| {
                let magnitude = -(1.0 - rng.uniform01()).ln();
                if rng.uniform01() < 0.5 {
                    -magnitude
                } else {
                    magnitude
                }
            })
            .collect(),
    )?;
    let split = (0..n).map(|i| match i % 10 {
        0 | 1 => Split::Test,
        2 => Split::Val,
        _ => Split::Train,
    }).collect();
    let data = DatasetTable::new("laplace", x, y, split, vec!["x".into()], vec!["y".into()])?;
    let base = BaseModel::single(Mlp::zeroed(MlpConfig::regression(1, &[4], 1, Activation::Relu))?);
    let probe = make_probe(&data, &ProbeConfig::full(), 128)?;
    let sched = TrainSchedule { batch_size: 128, ..TrainSchedule::default() }.fixed_budget(3000);

    let xt = data.x(Split::Test);
    let yt = data.raw_y(Split::Test);
    let mean = data.target_scaler().inverse(&base.predict(&xt)?)?;
    let std = [data.target_scaler().inverse_variance(&Matrix::from_vec(1, 1, vec![1.0])?)?.get(0, 0).sqrt()];
    for head in [HeadKind::Gaussian, HeadKind::Gengauss] {
        let aux = AuxConfig::new(ConditioningMode::InputOnly).with_head(head).with_hidden(vec![16, 16]);
        let (model, _) = fit_posthoc(&base, &probe, &aux, &sched, &AdamWConfig::new(3e-3, 0.0), &Rng::new(1))?;
        let (nll, cal) = match model.predict_head(&xt)?.destandardize(&std) {
            HeadOutput::Gaussian { variance } => {
                let p = gaussians_from(&mean, &variance)?;
                (mean_nll(&p, yt.as_slice())?, ece(&p, yt.as_slice(), &default_levels())?)
            }
            HeadOutput::Gengauss { alpha, beta } => {
                let p = gengaussians_from(&mean, &alpha, &beta)?;
                println!("mean fitted shape {:.3}", beta.as_slice().iter().sum::<f64>() / beta.rows() as f64);
                (mean_nll(&p, yt.as_slice())?, ece(&p, yt.as_slice(), &default_levels())?)
            }
        };
        println!("{head:?}: test nll {nll:.4}, ece {cal:.4}");
    }
    let laplace = GenGaussianPrediction::new(0.0, 1.0, 1.0);
    println!("Laplace(0, 1) cdf at 1: {:.6} (exact {:.6})", gengauss_cdf(&laplace, 1.0)?, 1.0 - 0.5 * (-1.0f64).exp());
    Ok(())
}
