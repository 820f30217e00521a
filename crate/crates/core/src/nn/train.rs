use std::io::Write;
use std::path::Path;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::data::{DatasetTable, Split};
use crate::error::{Error, Result};
use crate::nn::{AdamW, AdamWConfig, Mlp, Mode, ParameterStore};
use crate::numerics::{Matrix, Rng, Stream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct TrainSchedule {
    pub max_epochs: usize,
    pub batch_size: usize,
    /// Evaluations without validation improvement before stopping.
    pub early_stop_patience: usize,
    #[serde(default = "one")]
    pub eval_every: usize,
    /// Optional hard budget of optimizer updates.
    #[serde(default)]
    pub max_steps: Option<u64>,
    /// When false, training runs to the epoch or step budget and keeps the
    /// final parameters; validation loss is still recorded.
    #[serde(default = "yes")]
    pub early_stopping: bool,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

impl Default for TrainSchedule {
    fn default() -> Self {
        Self {
            max_epochs: 100,
            batch_size: 128,
            early_stop_patience: 8,
            eval_every: 1,
            max_steps: None,
            early_stopping: true,
        }
    }
}

impl TrainSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.early_stop_patience == 0 || self.eval_every == 0 {
            return Err(Error::Config(format!("invalid schedule: {self:?}")));
        }
        Ok(())
    }

    /// Updates per epoch for `n` training rows (partial batches included).
    pub fn steps_per_epoch(&self, n: usize) -> u64 {
        n.div_ceil(self.batch_size) as u64
    }

    /// Exactly `steps` updates with no early stopping.
    pub fn fixed_budget(&self, steps: u64) -> Self {
        Self {
            max_epochs: usize::MAX,
            max_steps: Some(steps.max(1)),
            early_stopping: false,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub epoch: usize,
    pub step: u64,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub records: Vec<EvalRecord>,
    pub best_val_loss: f64,
    pub best_step: u64,
    pub total_steps: u64,
    pub stopped_early: bool,
}

impl TrainTrace {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "epoch,step,train_loss,val_loss")?;
        for r in &self.records {
            writeln!(f, "{},{},{},{}", r.epoch, r.step, r.train_loss, r.val_loss)?;
        }
        Ok(())
    }
}

/// Mini-batch loop shared by every trainer.
///
/// `batch_step` runs forward/backward for the given training row indices and
/// returns the batch loss; gradients are zeroed before and applied after it.
/// `validate` returns the loss that drives early stopping. The best-validation
/// parameters are restored before returning.
pub(crate) fn fit_loop<F, V>(
    net: &mut Mlp,
    opt: &AdamWConfig,
    sched: &TrainSchedule,
    n_train: usize,
    rng: &Rng,
    mut batch_step: F,
    mut validate: V,
) -> Result<TrainTrace>
where
    F: FnMut(&mut Mlp, &[usize], &mut Rng) -> Result<f64>,
    V: FnMut(&Mlp) -> Result<f64>,
{
    sched.validate()?;
    opt.validate()?;
    if n_train == 0 {
        return Err(Error::Empty("training split"));
    }
    let mut optimizer = AdamW::new(opt.clone());
    let mut shuffle = rng.fork(Stream::Shuffle);
    let noise_root = rng.fork(Stream::Dropout);
    let mut trace = TrainTrace {
        best_val_loss: f64::INFINITY,
        ..TrainTrace::default()
    };
    let mut best: Option<ParameterStore> = None;
    let mut since_best = 0usize;
    let mut steps = 0u64;
    let budget = sched.max_steps.unwrap_or(u64::MAX);

    'epochs: for epoch in 1..=sched.max_epochs.max(1) {
        let order = shuffle.permutation(n_train);
        let mut epoch_rng = noise_root.fork(Stream::Custom(epoch as u64));
        let (mut loss_sum, mut loss_n) = (0.0, 0usize);
        let mut budget_hit = false;
        for batch in order.chunks(sched.batch_size) {
            net.zero_grad();
            let loss = batch_step(net, batch, &mut epoch_rng)?;
            steps += 1;
            if !loss.is_finite() {
                trace.total_steps = steps;
                return Err(Error::Divergence {
                    step: steps,
                    trace: Box::new(trace),
                });
            }
            optimizer.step(net.params_mut());
            loss_sum += loss * batch.len() as f64;
            loss_n += batch.len();
            if steps >= budget {
                budget_hit = true;
                break;
            }
        }
        if epoch % sched.eval_every == 0 || budget_hit || epoch == sched.max_epochs {
            let val = validate(net)?;
            trace.records.push(EvalRecord {
                epoch,
                step: steps,
                train_loss: loss_sum / loss_n.max(1) as f64,
                val_loss: val,
            });
            if val < trace.best_val_loss {
                trace.best_val_loss = val;
                trace.best_step = steps;
                best = Some(net.params().clone());
                since_best = 0;
            } else if sched.early_stopping {
                since_best += 1;
                if since_best >= sched.early_stop_patience {
                    trace.stopped_early = true;
                    break 'epochs;
                }
            }
        }
        if budget_hit {
            break;
        }
    }
    trace.total_steps = steps;
    match best {
        Some(store) => {
            if sched.early_stopping {
                *net.params_mut() = store;
            }
        }
        None => {
            return Err(Error::Divergence {
                step: steps,
                trace: Box::new(trace),
            })
        }
    }
    Ok(trace)
}

/// Mean squared error over all entries.
pub fn mse(pred: &Matrix, target: &Matrix) -> f64 {
    let n = pred.as_slice().len() as f64;
    pred.as_slice().iter().zip(target.as_slice()).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n
}

/// Trains `net` on the standardized training split with MSE, early stopping
/// on validation MSE and restoring the best checkpoint.
pub fn train_mse(
    net: &mut Mlp,
    data: &DatasetTable,
    sched: &TrainSchedule,
    opt: &AdamWConfig,
    rng: &Rng,
) -> Result<TrainTrace> {
    let x = data.x(Split::Train);
    let y = data.y(Split::Train);
    let xv = data.x(Split::Val);
    let yv = data.y(Split::Val);
    if x.rows() == 0 {
        return Err(Error::Empty("training split"));
    }
    if xv.rows() == 0 {
        return Err(Error::Empty("validation split"));
    }
    if y.cols() != net.config().output_width() {
        return Err(Error::shape("train_mse", net.config().output_width(), y.cols()));
    }
    fit_loop(
        net,
        opt,
        sched,
        x.rows(),
        rng,
        |net, batch, brng| {
            let xb = x.select_rows(batch);
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
