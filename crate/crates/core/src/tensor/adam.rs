use serde::{Deserialize, Serialize};

use super::Array;
use crate::error::{Error, Result};

/// Moment estimates for the Adam optimizer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: Vec<Array>,
    v: Vec<Array>,
}

impl AdamState {
    pub fn new(params: &[Array]) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: params.iter().map(|p| Array::zeros(p.shape())).collect(),
            v: params.iter().map(|p| Array::zeros(p.shape())).collect(),
        }
    }
}

/// One bias-corrected Adam update applied in place.
pub fn adam_step(params: &mut [Array], grads: &[Array], state: &mut AdamState, lr: f64) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::shape("adam_step", &[params.len()], &[grads.len(), state.m.len()]));
    }
    for ((p, g), m) in params.iter().zip(grads).zip(&state.m) {
        if p.shape() != g.shape() || p.shape() != m.shape() {
            return Err(Error::shape("adam_step", p.shape(), g.shape()));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for (((p, g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        for (((pv, &gv), mv), vv) in p
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.data_mut())
            .zip(v.data_mut())
        {
            *mv = b1 * *mv + (1.0 - b1) * gv;
            *vv = b2 * *vv + (1.0 - b2) * gv * gv;
            let m_hat = *mv / c1;
            let v_hat = *vv / c2;
            *pv -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
