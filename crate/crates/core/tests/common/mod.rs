//! Helpers shared by the integration test targets: workspace paths, brute-force
//! metric oracles and finite-difference gradient checks.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use iocue::data::{gen_toy, DatasetTable, ToySpec};
use iocue::distributions::PredictiveDistribution;
use iocue::experiments::ExperimentConfig;
use iocue::nn::{Mlp, Mode};
use iocue::numerics::{Matrix, Rng};

pub fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .expect("workspace root exists")
}

/// Points `UQ_DATA_DIR` at the workspace so relative dataset paths in the
/// bundled configs resolve from any working directory.
pub fn use_workspace_data() {
    std::env::set_var("UQ_DATA_DIR", workspace_root());
}

pub fn config(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&workspace_root().join("configs").join(name)).expect("bundled config loads")
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.normal()).collect()).unwrap()
}

/// Small toy table for fast end-to-end tests.
pub fn small_toy(seed: u64) -> DatasetTable {
    gen_toy(&ToySpec {
        n_train: 400,
        n_test: 200,
        seed,
        ..ToySpec::default()
    })
    .unwrap()
}

/// Number of (id, ood) pairs with the OOD score above, ties counting ½.
pub fn u_brute(id: &[f64], ood: &[f64]) -> f64 {
    let mut wins = 0.0;
    for &o in ood {
        for &i in id {
            if o > i {
                wins += 1.0;
            } else if o == i {
                wins += 0.5;
            }
        }
    }
    wins
}

/// P(ood > id) + ½·P(ood = id) by exhaustive pair count.
pub fn auroc_brute(id: &[f64], ood: &[f64]) -> f64 {
    u_brute(id, ood) / (id.len() * ood.len()) as f64
}

/// Rank of each value as 1 + #smaller + ½·#equal-others, by exhaustive comparison.
pub fn ranks_brute(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let below = xs.iter().filter(|&&y| y < x).count() as f64;
            let ties = xs.iter().filter(|&&y| y == x).count() as f64;
            below + (ties + 1.0) / 2.0
        })
        .collect()
}

fn pearson_plain(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        0.0
    } else {
        cov / (va.sqrt() * vb.sqrt())
    }
}

pub fn spearman_brute(a: &[f64], b: &[f64]) -> f64 {
    pearson_plain(&ranks_brute(a), &ranks_brute(b))
}

/// Mean over levels of |p − share of samples whose PIT is ≤ p|, one sample at a time.
pub fn ece_brute<D: PredictiveDistribution>(preds: &[D], ys: &[f64], levels: &[f64]) -> f64 {
    let pit: Vec<f64> = preds.iter().zip(ys).map(|(p, &y)| p.cdf(y).unwrap()).collect();
    let mut total = 0.0;
    for &p in levels {
        let mut covered = 0usize;
        for &u in &pit {
            if u <= p {
                covered += 1;
            }
        }
        total += (p - covered as f64 / pit.len() as f64).abs();
    }
    total / levels.len() as f64
}

/// |a − b| / max(|a|, |b|), with differences below `floor` treated as zero.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    let d = (a - b).abs();
    if d <= floor {
        return 0.0;
    }
    d / a.abs().max(b.abs())
}

/// Largest relative error between the analytic parameter gradient of
/// `loss(net(x))` and central differences with step `h`. `loss` returns the
/// value and d(loss)/d(outputs).
pub fn mlp_gradient_error(net: &mut Mlp, x: &Matrix, loss: impl Fn(&Matrix) -> (f64, Matrix), h: f64) -> f64 {
    let mut rng = Rng::new(0);
    net.zero_grad();
    let out = net.forward(x, Mode::Eval, &mut rng).unwrap();
    let (_, upstream) = loss(&out);
    net.backward(&upstream).unwrap();
    let analytic: Vec<Vec<f64>> = net.params().params.iter().map(|p| p.grad.as_slice().to_vec()).collect();
    let mut worst = 0.0f64;
    for (pi, grads) in analytic.iter().enumerate() {
        for (vi, &g) in grads.iter().enumerate() {
            let orig = net.params().params[pi].value.as_slice()[vi];
            net.params_mut().params[pi].value.as_mut_slice()[vi] = orig + h;
            let up = loss(&net.predict(x).unwrap()).0;
            net.params_mut().params[pi].value.as_mut_slice()[vi] = orig - h;
            let down = loss(&net.predict(x).unwrap()).0;
            net.params_mut().params[pi].value.as_mut_slice()[vi] = orig;
            worst = worst.max(rel_err(g, (up - down) / (2.0 * h), 1e-9));
        }
    }
    worst
}

/// Linear functional Σ w ⊙ out, whose output gradient is `w`.
pub fn linear_loss(w: Matrix) -> impl Fn(&Matrix) -> (f64, Matrix) {
    move |out: &Matrix| {
        let v = out.as_slice().iter().zip(w.as_slice()).map(|(a, b)| a * b).sum();
        (v, w.clone())
    }
}
