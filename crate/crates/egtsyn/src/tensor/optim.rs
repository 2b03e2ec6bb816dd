//! Adam optimizer with bias-corrected first and second moment estimates.

use super::Tensor;

/// Learning-rate and moment-decay settings for [`adam_step`].
#[derive(Debug, Clone, Copy)]
pub struct AdamHyperParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyperParams {
    fn default() -> Self {
        AdamHyperParams {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Per-parameter moment accumulators, one pair of buffers per tensor in the
/// parameter list. The step counter drives bias correction.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl AdamState {
    pub fn new(params: &[Tensor]) -> Self {
        AdamState {
            m: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            v: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// Applies one Adam update in place using each tensor's accumulated
/// gradient. Tensors without a gradient buffer are left untouched.
pub fn adam_step(params: &mut [Tensor], state: &mut AdamState, hp: &AdamHyperParams) {
    assert_eq!(params.len(), state.m.len(), "optimizer state size mismatch");
    state.step += 1;
    let t = state.step as f64;
    let bc1 = 1.0 - hp.beta1.powf(t);
    let bc2 = 1.0 - hp.beta2.powf(t);
    for (i, p) in params.iter_mut().enumerate() {
        let Some(grad) = p.grad() else { continue };
        let grad = grad.to_vec();
        let m = &mut state.m[i];
        let v = &mut state.v[i];
        let data = p.data_mut();
        for j in 0..data.len() {
            let g = grad[j];
            m[j] = hp.beta1 * m[j] + (1.0 - hp.beta1) * g;
            v[j] = hp.beta2 * v[j] + (1.0 - hp.beta2) * g * g;
            let m_hat = m[j] / bc1;
            let v_hat = v[j] / bc2;
            data[j] -= hp.lr * m_hat / (v_hat.sqrt() + hp.eps);
        }
    }
}
