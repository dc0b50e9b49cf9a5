use super::model::ParamSet;
use crate::error::{Error, Result};

pub const DEFAULT_LEARNING_RATE: f64 = 0.001;

/// Adam moments, one flat buffer per parameter tensor in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
}

impl AdamState {
    /// lr 0.001, betas (0.9, 0.999), eps 1e-8.
    pub fn new(params: &ParamSet) -> Self {
        Self::with_hyperparameters(params, DEFAULT_LEARNING_RATE, 0.9, 0.999, 1e-8)
    }

    pub fn with_hyperparameters(
        params: &ParamSet,
        learning_rate: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    ) -> Self {
        let zeros: Vec<Vec<f64>> = params
            .tensors()
            .iter()
            .map(|(_, t)| vec![0.0; t.len()])
            .collect();
        AdamState {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            step: 0,
            first_moment: zeros.clone(),
            second_moment: zeros,
        }
    }
}

/// One bias-corrected Adam update. Nothing is modified when any gradient
/// entry is non-finite.
pub fn adam_step(state: &mut AdamState, params: &mut ParamSet, grads: &ParamSet) -> Result<()> {
    let grad_tensors = grads.tensors();
    if grad_tensors.len() != state.first_moment.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} gradient tensors, optimizer tracks {}",
            grad_tensors.len(),
            state.first_moment.len()
        )));
    }
    for ((name, g), m) in grad_tensors.iter().zip(&state.first_moment) {
        if g.len() != m.len() {
            return Err(Error::ShapeMismatch(format!("tensor {name}")));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient(name.clone()));
        }
    }

    state.step += 1;
    let t = state.step as i32;
    let correction1 = 1.0 - state.beta1.powi(t);
    let correction2 = 1.0 - state.beta2.powi(t);
    let (b1, b2, lr, eps) = (state.beta1, state.beta2, state.learning_rate, state.epsilon);

    for (((p, (_, g)), m), v) in params
        .tensors_mut()
        .into_iter()
        .zip(grad_tensors)
        .zip(state.first_moment.iter_mut())
        .zip(state.second_moment.iter_mut())
    {
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = m[i] / correction1;
            let v_hat = v[i] / correction2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
