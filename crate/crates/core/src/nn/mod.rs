//! Multilayer perceptrons with analytic backpropagation, dropout and AdamW.

mod adamw;
mod checkpoint;
mod mlp;
mod train;

pub use adamw::{AdamW, AdamWConfig};
pub use checkpoint::{network_hash, read_json, sha256_hex, write_atomic, MlpCheckpoint, NamedArray};
pub use mlp::{Activation, HeadActivation, Mlp, MlpConfig, Mode, Param, ParameterStore};
pub use train::{mse, train_mse, EvalRecord, TrainSchedule, TrainTrace};

#[cfg(test)]
pub(crate) use mlp::softplus;
pub(crate) use train::fit_loop;
