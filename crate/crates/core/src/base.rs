//! Frozen MSE-trained base regressors.
//!
//! A base is one network or the average of several networks trained on the
//! same data from different seeds. Either way it is a deterministic map
//! `x ↦ f(x)` in standardized units that post-hoc models only read.

use serde::{Deserialize, Serialize};

use crate::data::{augment, AugmentationSpec, DatasetTable, Split, Standardizer};
use crate::error::{Error, Result};
use crate::nn::{
    fit_loop, mse, network_hash, sha256_hex, AdamWConfig, Mlp, MlpCheckpoint, MlpConfig, Mode, TrainSchedule, TrainTrace,
};
use crate::numerics::{Matrix, Rng, Stream};

#[derive(Clone, Debug)]
pub struct BaseModel {
    members: Vec<Mlp>,
}

impl BaseModel {
    pub fn new(members: Vec<Mlp>) -> Result<Self> {
        let first = members.first().ok_or(Error::Empty("base members"))?;
        if members.iter().any(|m| m.config() != first.config()) {
            return Err(Error::Config("base members must share one configuration".into()));
        }
        Ok(Self { members })
    }

    pub fn single(net: Mlp) -> Self {
        Self { members: vec![net] }
    }

    pub fn members(&self) -> &[Mlp] {
        &self.members
    }

    pub fn config(&self) -> &MlpConfig {
        self.members[0].config()
    }

    pub fn input_width(&self) -> usize {
        self.config().input_width()
    }

    pub fn output_width(&self) -> usize {
        self.config().output_width()
    }

    /// Average of the member predictions for standardized inputs.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        let mut acc = self.members[0].predict(x)?;
        if self.members.len() == 1 {
            return Ok(acc);
        }
        for m in &self.members[1..] {
            let p = m.predict(x)?;
            for (a, b) in acc.as_mut_slice().iter_mut().zip(p.as_slice()) {
                *a += b;
            }
        }
        let inv = 1.0 / self.members.len() as f64;
        Ok(acc.map(|v| v * inv))
    }

    /// SHA-256 over the member network hashes, in order.
    pub fn hash(&self) -> String {
        if self.members.len() == 1 {
            return network_hash(&self.members[0]);
        }
        let joined: Vec<String> = self.members.iter().map(network_hash).collect();
        sha256_hex(joined.join(",").as_bytes())
    }

    pub fn to_checkpoint(&self, seeds: &[u64], data: &DatasetTable) -> BaseCheckpoint {
        BaseCheckpoint {
            members: self
                .members
                .iter()
                .zip(seeds.iter().copied().chain(std::iter::repeat(0)))
                .map(|(m, s)| MlpCheckpoint::from_net(m, s, None, None))
                .collect(),
            feature_scaler: data.feature_scaler().clone(),
            target_scaler: data.target_scaler().clone(),
        }
    }
}

/// Serialized base: member checkpoints plus the scalers of the data it was trained on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseCheckpoint {
    pub members: Vec<MlpCheckpoint>,
    pub feature_scaler: Standardizer,
    pub target_scaler: Standardizer,
}

impl BaseCheckpoint {
    pub fn to_model(&self) -> Result<BaseModel> {
        BaseModel::new(self.members.iter().map(|c| c.to_net()).collect::<Result<Vec<_>>>()?)
    }
}

/// Trains `net` with MSE on the training split, applying `augmentations` to
/// each batch of inputs. Early stopping uses clean validation MSE.
pub fn train_mse_augmented(
    net: &mut Mlp,
    data: &DatasetTable,
    augmentations: &[AugmentationSpec],
    sched: &TrainSchedule,
    opt: &AdamWConfig,
    rng: &Rng,
) -> Result<TrainTrace> {
    if augmentations.is_empty() {
        return crate::nn::train_mse(net, data, sched, opt, rng);
    }
    for a in augmentations {
        a.validate(data.input_width())?;
    }
    let x = data.x(Split::Train);
    let y = data.y(Split::Train);
    let xv = data.x(Split::Val);
    let yv = data.y(Split::Val);
    if xv.rows() == 0 {
        return Err(Error::Empty("validation split"));
    }
    fit_loop(
        net,
        opt,
        sched,
        x.rows(),
        rng,
        |net, batch, brng| {
            let xb = augment(&x.select_rows(batch), augmentations, brng);
            let yb = y.select_rows(batch);
            let out = net.forward(&xb, Mode::Train, brng)?;
            let scale = 2.0 / out.as_slice().len() as f64;
            let mut grad = out.clone();
            for (g, t) in grad.as_mut_slice().iter_mut().zip(yb.as_slice()) {
                *g = scale * (*g - t);
            }
            let loss = mse(&out, &yb);
            net.backward(&grad)?;
            Ok(loss)
        },
        |net| Ok(mse(&net.predict(&xv)?, &yv)),
    )
}

/// Per-member seed used by [`train_base`].
pub fn member_seed(rng: &Rng, member: usize) -> u64 {
    rng.fork(Stream::Member(member as u64)).seed()
}

/// Trains `members` networks with MSE (each from its own seed) and averages them.
pub fn train_base(
    data: &DatasetTable,
    cfg: &MlpConfig,
    members: usize,
    augmentations: &[AugmentationSpec],
    sched: &TrainSchedule,
    opt: &AdamWConfig,
    rng: &Rng,
) -> Result<(BaseModel, Vec<TrainTrace>, Vec<u64>)> {
    if members == 0 {
        return Err(Error::Config("base needs at least one member".into()));
    }
    let mut nets = Vec::with_capacity(members);
    let mut traces = Vec::with_capacity(members);
    let mut seeds = Vec::with_capacity(members);
    for i in 0..members {
        let seed = if members == 1 { rng.seed() } else { member_seed(rng, i) };
        let r = Rng::new(seed);
        let mut net = Mlp::new(cfg.clone(), &mut r.fork(Stream::Init))?;
        traces.push(train_mse_augmented(&mut net, data, augmentations, sched, opt, &r)?);
        nets.push(net);
        seeds.push(seed);
    }
    Ok((BaseModel::new(nets)?, traces, seeds))
}

/// Mean number of optimizer updates across member traces.
pub fn mean_updates(traces: &[TrainTrace]) -> u64 {
    if traces.is_empty() {
        return 0;
    }
    traces.iter().map(|t| t.total_steps).sum::<u64>() / traces.len() as u64
}
