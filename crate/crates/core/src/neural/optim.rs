use super::config::OptimizerKind;
use super::params::{AdamState, ModelParams};
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// Applies one update of `kind` with learning rate `lr`.
pub fn optimizer_step(params: &mut ModelParams, grads: &[Tensor], kind: OptimizerKind, lr: f64) -> Result<()> {
    optimizer_step_masked(params, grads, kind, lr, &[])
}

/// As [`optimizer_step`], leaving tensors with `skip[i]` untouched. Only
/// tensors whose gradient is always zero may be skipped; for them both rules
/// are a no-op anyway.
pub(crate) fn optimizer_step_masked(
    params: &mut ModelParams,
    grads: &[Tensor],
    kind: OptimizerKind,
    lr: f64,
    skip: &[bool],
) -> Result<()> {
    let skipped = |i: usize| skip.get(i).copied().unwrap_or(false);
    if grads.len() != params.tensors.len() {
        return Err(Error::dimension("gradient tensors", params.tensors.len(), grads.len()));
    }
    for (i, (p, g)) in params.tensors.iter().zip(grads).enumerate() {
        if p.shape != g.shape {
            return Err(Error::dimension(
                format!("gradient of `{}`", params.names[i]),
                format!("{:?}", p.shape),
                format!("{:?}", g.shape),
            ));
        }
    }
    match kind {
        OptimizerKind::Sgd => {
            for (i, (p, g)) in params.tensors.iter_mut().zip(grads).enumerate() {
                if skipped(i) {
                    continue;
                }
                for (x, d) in p.data.iter_mut().zip(&g.data) {
                    *x -= lr * d;
                }
            }
        }
        OptimizerKind::Adam => {
            let state = params.adam.get_or_insert_with(|| AdamState {
                step: 0,
                m: params.tensors.iter().map(|t| Tensor::zeros(&t.shape)).collect(),
                v: params.tensors.iter().map(|t| Tensor::zeros(&t.shape)).collect(),
            });
            state.step += 1;
            let t = state.step as i32;
            let c1 = 1.0 - ADAM_BETA1.powi(t);
            let c2 = 1.0 - ADAM_BETA2.powi(t);
            for (i, (p, g)) in params.tensors.iter_mut().zip(grads).enumerate() {
                if skipped(i) {
                    continue;
                }
                let m = &mut state.m[i].data;
                let v = &mut state.v[i].data;
                for j in 0..p.data.len() {
                    let d = g.data[j];
                    m[j] = ADAM_BETA1 * m[j] + (1.0 - ADAM_BETA1) * d;
                    v[j] = ADAM_BETA2 * v[j] + (1.0 - ADAM_BETA2) * d * d;
                    let m_hat = m[j] / c1;
                    let v_hat = v[j] / c2;
                    p.data[j] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> ModelParams {
        ModelParams { names: vec!["w".into()], tensors: vec![Tensor::from_vec(&[1], vec![v]).unwrap()], adam: None }
    }

    fn grad(v: f64) -> Vec<Tensor> {
        vec![Tensor::from_vec(&[1], vec![v]).unwrap()]
    }

    #[test]
    fn sgd_step() {
        let mut p = scalar(1.0);
        optimizer_step(&mut p, &grad(0.5), OptimizerKind::Sgd, 0.003).unwrap();
        assert!((p.tensors[0].data[0] - 0.9985).abs() < 1e-15);
    }

    #[test]
    fn adam_first_step() {
        let mut p = scalar(1.0);
        optimizer_step(&mut p, &grad(1.0), OptimizerKind::Adam, 0.003).unwrap();
        // Independent evaluation of the recurrence at t = 1.
        let m = 0.1 * 1.0;
        let v = 0.001 * 1.0;
        let update = 0.003 * (m / 0.1) / ((v / (1.0 - 0.999f64)).sqrt() + 1e-8);
        assert!((1.0 - p.tensors[0].data[0] - update).abs() < 1e-15);
        assert!((update - 0.003).abs() < 1e-10);
    }

    #[test]
    fn zero_gradient_changes_nothing() {
        for kind in [OptimizerKind::Sgd, OptimizerKind::Adam] {
            let mut p = scalar(0.25);
            optimizer_step(&mut p, &grad(0.0), kind, 0.003).unwrap();
            assert_eq!(p.tensors[0].data[0], 0.25);
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut p = scalar(1.0);
        assert!(optimizer_step(&mut p, &[Tensor::zeros(&[2])], OptimizerKind::Sgd, 0.1).is_err());
    }
}
