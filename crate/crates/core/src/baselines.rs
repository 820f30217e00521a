//! Gaussian deep ensemble trained on the joint negative log-likelihood.
//!
//! The output-only post-hoc conditioner lives in [`crate::posthoc`] as
//! [`fit_output_only_baseline`](crate::posthoc::fit_output_only_baseline).

use serde::{Deserialize, Serialize};

use crate::data::{DatasetTable, Split};
use crate::distributions::{mixture_decomposition, GaussianPrediction, MixtureMoments};
use crate::error::{Error, Result};
use crate::nn::{fit_loop, AdamWConfig, HeadActivation, Mlp, MlpCheckpoint, MlpConfig, Mode, TrainSchedule, TrainTrace};
use crate::numerics::{Matrix, Rng, Stream};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Member architecture: hidden layers of a regression MLP whose output has K
/// identity mean channels followed by K softplus variance channels.
pub fn member_config(template: &MlpConfig) -> MlpConfig {
    let k = template.output_width();
    let mut widths = template.layer_widths.clone();
    *widths.last_mut().expect("validated config") = 2 * k;
    let mut heads = vec![HeadActivation::Identity; k];
    heads.extend(vec![HeadActivation::SoftplusPositive; k]);
    MlpConfig {
        layer_widths: widths,
        head_activations: heads,
        ..template.clone()
    }
}

#[derive(Clone, Debug)]
pub struct EnsembleModel {
    members: Vec<Mlp>,
}

/// Per-row, per-channel mixture moments in standardized units.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsemblePrediction {
    pub mean: Matrix,
    pub aleatoric: Matrix,
    pub epistemic: Matrix,
}

impl EnsemblePrediction {
    pub fn variance(&self) -> Matrix {
        let mut v = self.aleatoric.clone();
        for (a, b) in v.as_mut_slice().iter_mut().zip(self.epistemic.as_slice()) {
            *a += b;
        }
        v
    }

    pub fn gaussians(&self, row: usize) -> Vec<GaussianPrediction> {
        let v = self.variance();
        self.mean.row(row).iter().zip(v.row(row)).map(|(&m, &s)| GaussianPrediction::new(m, s)).collect()
    }
}

impl EnsembleModel {
    pub fn new(members: Vec<Mlp>) -> Result<Self> {
        if members.len() < 2 {
            return Err(Error::Config(format!("an ensemble needs at least 2 members, got {}", members.len())));
        }
        let cfg = members[0].config();
        if members.iter().any(|m| m.config() != cfg) || !cfg.output_width().is_multiple_of(2) {
            return Err(Error::Config("ensemble members must share a two-head configuration".into()));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[Mlp] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn output_width(&self) -> usize {
        self.members[0].config().output_width() / 2
    }

    /// Mixture prediction for standardized inputs.
    pub fn predict(&self, x: &Matrix) -> Result<EnsemblePrediction> {
        let k = self.output_width();
        let outs = self.members.iter().map(|m| m.predict(x)).collect::<Result<Vec<_>>>()?;
        let n = x.rows();
        let mut mean = Matrix::zeros(n, k);
        let mut aleatoric = Matrix::zeros(n, k);
        let mut epistemic = Matrix::zeros(n, k);
        let mut preds = Vec::with_capacity(outs.len());
        for r in 0..n {
            for c in 0..k {
                preds.clear();
                preds.extend(outs.iter().map(|o| GaussianPrediction::new(o.get(r, c), o.get(r, k + c))));
                let MixtureMoments {
                    mean: m,
                    aleatoric: a,
                    epistemic: e,
                } = mixture_decomposition(&preds)?;
                mean.set(r, c, m);
                aleatoric.set(r, c, a);
                epistemic.set(r, c, e);
            }
        }
        Ok(EnsemblePrediction {
            mean,
            aleatoric,
            epistemic,
        })
    }

    pub fn to_checkpoint(&self, seeds: &[u64]) -> EnsembleCheckpoint {
        EnsembleCheckpoint {
            members: self
                .members
                .iter()
                .zip(seeds.iter().copied().chain(std::iter::repeat(0)))
                .map(|(m, s)| MlpCheckpoint::from_net(m, s, None, None))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleCheckpoint {
    pub members: Vec<MlpCheckpoint>,
}

impl EnsembleCheckpoint {
    pub fn to_model(&self) -> Result<EnsembleModel> {
        EnsembleModel::new(self.members.iter().map(|c| c.to_net()).collect::<Result<Vec<_>>>()?)
    }
}

/// Joint Gaussian NLL of a two-head output and its gradient with respect to
/// the outputs (mean channels first, variance channels second).
pub fn joint_nll(out: &Matrix, y: &Matrix) -> Result<(f64, Matrix)> {
    let k = y.cols();
    if out.rows() != y.rows() || out.cols() != 2 * k {
        return Err(Error::shape("joint_nll", format!("({}, {})", y.rows(), 2 * k), format!("{:?}", out.shape())));
    }
    let inv_n = 1.0 / (y.rows() * k) as f64;
    let mut loss = 0.0;
    let mut grad = Matrix::zeros(out.rows(), out.cols());
    for r in 0..y.rows() {
        let o = out.row(r);
        for c in 0..k {
            let (mu, v) = (o[c], o[k + c]);
            let e = mu - y.get(r, c);
            loss += 0.5 * (e * e / v + v.ln());
            grad.set(r, c, e / v * inv_n);
            grad.set(r, k + c, 0.5 * (1.0 / v - e * e / (v * v)) * inv_n);
        }
    }
    Ok((loss * inv_n + HALF_LN_2PI, grad))
}

/// Trains one member per seed. Each member draws its initialization and
/// shuffling from its own seed; nothing else differs between members.
pub fn train_ensemble_with_seeds(
    data: &DatasetTable,
    template: &MlpConfig,
    seeds: &[u64],
    sched: &TrainSchedule,
    opt: &AdamWConfig,
) -> Result<(EnsembleModel, Vec<TrainTrace>)> {
    if seeds.len() < 2 {
        return Err(Error::Config(format!("an ensemble needs at least 2 members, got {}", seeds.len())));
    }
    let cfg = member_config(template);
    let x = data.x(Split::Train);
    let y = data.y(Split::Train);
    let xv = data.x(Split::Val);
    let yv = data.y(Split::Val);
    if xv.rows() == 0 {
        return Err(Error::Empty("validation split"));
    }
    if y.cols() != template.output_width() {
        return Err(Error::shape("train_ensemble", template.output_width(), y.cols()));
    }
    let mut members = Vec::with_capacity(seeds.len());
    let mut traces = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let rng = Rng::new(seed);
        let mut net = Mlp::new(cfg.clone(), &mut rng.fork(Stream::Init))?;
        let trace = fit_loop(
            &mut net,
            opt,
            sched,
            x.rows(),
            &rng,
            |net, batch, brng| {
                let out = net.forward(&x.select_rows(batch), Mode::Train, brng)?;
                let (loss, grad) = joint_nll(&out, &y.select_rows(batch))?;
                net.backward(&grad)?;
                Ok(loss)
            },
            |net| Ok(joint_nll(&net.predict(&xv)?, &yv)?.0),
        )?;
        members.push(net);
        traces.push(trace);
    }
    Ok((EnsembleModel::new(members)?, traces))
}

/// Trains `m` members with seeds forked from `rng`.
pub fn train_ensemble(
    data: &DatasetTable,
    template: &MlpConfig,
    m: usize,
    sched: &TrainSchedule,
    opt: &AdamWConfig,
    rng: &Rng,
) -> Result<(EnsembleModel, Vec<TrainTrace>)> {
    let seeds: Vec<u64> = (0..m as u64).map(|i| rng.fork(Stream::Member(i)).seed()).collect();
    train_ensemble_with_seeds(data, template, &seeds, sched, opt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;

    #[test]
    fn joint_nll_gradient_matches_finite_differences() {
        let out = Matrix::from_rows(&[vec![0.3, 0.8], vec![-1.0, 0.2]]).unwrap();
        let y = Matrix::from_rows(&[vec![0.0], vec![0.5]]).unwrap();
        let (_, g) = joint_nll(&out, &y).unwrap();
        let h = 1e-7;
        for i in 0..4 {
            let mut p = out.clone();
            let mut m = out.clone();
            p.as_mut_slice()[i] += h;
            m.as_mut_slice()[i] -= h;
            let fd = (joint_nll(&p, &y).unwrap().0 - joint_nll(&m, &y).unwrap().0) / (2.0 * h);
            assert!((g.as_slice()[i] - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn member_config_doubles_output() {
        let cfg = member_config(&MlpConfig::regression(3, &[8], 2, Activation::Relu));
        assert_eq!(cfg.output_width(), 4);
        assert_eq!(cfg.head_activations[1], HeadActivation::Identity);
        assert_eq!(cfg.head_activations[2], HeadActivation::SoftplusPositive);
    }

    #[test]
    fn single_member_rejected() {
        let net = Mlp::zeroed(member_config(&MlpConfig::regression(1, &[2], 1, Activation::Relu))).unwrap();
        assert!(EnsembleModel::new(vec![net]).is_err());
    }
}
