//! Adam with bias correction.

use crate::error::{Error, Result};
use crate::model::{Gradients, ModelParams};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// First and second moment estimates, one entry per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(param_count: usize) -> Self {
        AdamState {
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }

    pub fn for_params(params: &ModelParams) -> Self {
        Self::new(params.param_count())
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }
}

/// One Adam update at step `t` (1-based).
pub fn adam_step(
    params: &mut ModelParams,
    grads: &Gradients,
    state: &mut AdamState,
    t: u64,
    lr: f64,
) -> Result<()> {
    if t == 0 {
        return Err(Error::InvalidConfig("Adam step index starts at 1".into()));
    }
    let n = params.param_count();
    if grads.param_count() != n || state.m.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: grads.param_count().min(state.m.len()),
        });
    }
    let t = i32::try_from(t).unwrap_or(i32::MAX);
    let c1 = 1.0 - BETA1.powi(t);
    let c2 = 1.0 - BETA2.powi(t);
    for (((w, &g), m), v) in params
        .as_mut_slice()
        .iter_mut()
        .zip(grads.as_slice())
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = BETA1 * *m + (1.0 - BETA1) * g;
        *v = BETA2 * *v + (1.0 - BETA2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *w -= lr * m_hat / (v_hat.sqrt() + EPSILON);
    }
    Ok(())
}
