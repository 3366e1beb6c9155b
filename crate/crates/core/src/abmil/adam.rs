use super::{AbmilError, AbmilParams};

/// Optimiser constants for one Adam step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

/// First and second moment estimates plus the step count.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: AbmilParams,
    pub v: AbmilParams,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &AbmilParams) -> Self {
        AdamState { m: AbmilParams::zeros(params.shape()), v: AbmilParams::zeros(params.shape()), step: 0 }
    }
}

/// One bias-corrected Adam update with L2 coupled into the gradient.
///
/// Nothing is modified when any gradient component is non-finite.
pub fn adam_step(
    params: &mut AbmilParams,
    grads: &AbmilParams,
    state: &mut AdamState,
    hp: &AdamHyper,
) -> Result<(), AbmilError> {
    if grads.shape() != params.shape() || state.m.shape() != params.shape() {
        return Err(AbmilError::Shape("gradient, state and parameter shapes differ".into()));
    }
    if !grads.is_finite() {
        return Err(AbmilError::Divergence("non-finite gradient".into()));
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - hp.beta1.powi(t);
    let c2 = 1.0 - hp.beta2.powi(t);
    let theta = params.flat_mut();
    let m = state.m.flat_mut();
    let v = state.v.flat_mut();
    for (i, &g0) in grads.flat().iter().enumerate() {
        let g = g0 + hp.weight_decay * theta[i];
        m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * g;
        v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * g * g;
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        theta[i] -= hp.learning_rate * m_hat / (v_hat.sqrt() + hp.epsilon);
    }
    Ok(())
}
