use crate::base::BaseModel;
use crate::data::{augment, Probe, Split};
use crate::error::{Error, Result};
use crate::nn::{fit_loop, AdamWConfig, HeadActivation, Mlp, MlpConfig, Mode, TrainSchedule, TrainTrace};
use crate::numerics::{Matrix, Rng, Stream};
use crate::posthoc::{aux_input, detached_gaussian_nll, detached_gengauss_nll, AuxConfig, ConditioningMode, HeadKind, PosthocModel};

/// Raw bias that makes the softplus β head start at the Gaussian shape β = 2.
const BETA_BIAS_FOR_GAUSSIAN: f64 = 1.854_586_542_131_141_4;

fn build_aux(aux: &AuxConfig, d: usize, k: usize, rng: &mut Rng) -> Result<Mlp> {
    let width = aux.mode.width(d, k);
    let outputs = match aux.head {
        HeadKind::Gaussian => k,
        HeadKind::Gengauss => 2 * k,
    };
    let cfg = MlpConfig::regression(width, &aux.hidden, outputs, aux.activation)
        .with_heads(vec![HeadActivation::SoftplusPositive; outputs])
        .with_dropout(aux.dropout_p);
    let mut net = Mlp::new(cfg, rng)?;
    if aux.head == HeadKind::Gengauss {
        let last_bias = 2 * net.config().depth() - 1;
        let b = net.params_mut().params[last_bias].value.as_mut_slice();
        for v in &mut b[k..] {
            *v = BETA_BIAS_FOR_GAUSSIAN;
        }
    }
    Ok(net)
}

fn head_loss(head: HeadKind, residual: &Matrix, out: &Matrix) -> Result<(f64, Matrix)> {
    match head {
        HeadKind::Gaussian => detached_gaussian_nll(residual, out),
        HeadKind::Gengauss => detached_gengauss_nll(residual, out),
    }
}

fn residual(f: &Matrix, y: &Matrix) -> Matrix {
    let mut r = f.clone();
    for (a, b) in r.as_mut_slice().iter_mut().zip(y.as_slice()) {
        *a -= b;
    }
    r
}

/// Fits an auxiliary variance network to the frozen `base` on the probe.
///
/// Each batch draws the configured augmentations, applies them to `x`, and
/// feeds the augmented input to both `f` and `g`. The residual `f(x) − y` is a
/// constant of the objective. Early stopping uses the probe's validation rows
/// without augmentation.
pub fn fit_posthoc(
    base: &BaseModel,
    probe: &Probe,
    aux_cfg: &AuxConfig,
    sched: &TrainSchedule,
    opt: &AdamWConfig,
    rng: &Rng,
) -> Result<(PosthocModel, TrainTrace)> {
    let table = &probe.table;
    let d = base.input_width();
    let k = base.output_width();
    if table.input_width() != d || table.output_width() != k {
        return Err(Error::shape(
            "fit_posthoc",
            format!("D={d}, K={k}"),
            format!("D={}, K={}", table.input_width(), table.output_width()),
        ));
    }
    let x = table.x(Split::Train);
    let y = table.y(Split::Train);
    if x.rows() == 0 {
        return Err(Error::Empty("probe"));
    }
    let xv = table.x(Split::Val);
    let yv = table.y(Split::Val);
    if xv.rows() == 0 {
        return Err(Error::Empty("probe validation rows"));
    }
    let f_train = base.predict(&x)?;
    let f_val = base.predict(&xv)?;
    let r_val = residual(&f_val, &yv);
    let val_input = aux_input(aux_cfg.mode, &xv, &f_val)?;
    let augmentations = &probe.config.augmentations;
    let mode = aux_cfg.mode;
    let head = aux_cfg.head;

    let mut aux = build_aux(aux_cfg, d, k, &mut rng.fork(Stream::Init))?;
    let trace = fit_loop(
        &mut aux,
        opt,
        sched,
        x.rows(),
        rng,
        |net, batch, brng| {
            let mut xb = x.select_rows(batch);
            let fb = if augmentations.is_empty() {
                f_train.select_rows(batch)
            } else {
                xb = augment(&xb, augmentations, brng);
                base.predict(&xb)?
            };
            let rb = residual(&fb, &y.select_rows(batch));
            let out = net.forward(&aux_input(mode, &xb, &fb)?, Mode::Train, brng)?;
            let (loss, grad) = head_loss(head, &rb, &out)?;
            net.backward(&grad)?;
            Ok(loss)
        },
        |net| Ok(head_loss(head, &r_val, &net.predict(&val_input)?)?.0),
    )?;
    Ok((PosthocModel::new(base.clone(), aux, mode, head)?, trace))
}

/// [`fit_posthoc`] with the auxiliary network restricted to the frozen output.
pub fn fit_output_only_baseline(
    base: &BaseModel,
    probe: &Probe,
    aux_cfg: &AuxConfig,
    sched: &TrainSchedule,
    opt: &AdamWConfig,
    rng: &Rng,
) -> Result<(PosthocModel, TrainTrace)> {
    let cfg = AuxConfig {
        mode: ConditioningMode::OutputOnly,
        ..aux_cfg.clone()
    };
    fit_posthoc(base, probe, &cfg, sched, opt, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_bias_gives_gaussian_shape() {
        let b = crate::nn::softplus(BETA_BIAS_FOR_GAUSSIAN) + crate::distributions::VARIANCE_FLOOR;
        assert!((b - 2.0).abs() < 2e-6);
    }
}
