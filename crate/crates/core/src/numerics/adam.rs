use super::net::{Gradient, ProjectionNet};
use crate::error::{Error, Result};

pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Moment accumulators for Adam, shaped like the network they optimize.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub first: ProjectionNet,
    pub second: ProjectionNet,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(net: &ProjectionNet) -> Self {
        Self {
            step: 0,
            first: net.zeros_like(),
            second: net.zeros_like(),
            beta1: DEFAULT_BETA1,
            beta2: DEFAULT_BETA2,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

/// One bias-corrected Adam update of `net` in place.
///
/// On error neither `net` nor `state` is modified.
pub fn adam_step(
    net: &mut ProjectionNet,
    grad: &Gradient,
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::Config(format!(
            "learning rate must be positive, got {lr}"
        )));
    }
    if !net.same_shape(grad) || !net.same_shape(&state.first) {
        return Err(Error::Shape {
            context: "adam parameter count",
            expected: net.num_params(),
            actual: grad.num_params(),
        });
    }
    if !grad.is_finite() {
        return Err(Error::NonFinite("gradient"));
    }
    let step = state.step + 1;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);
    let blocks = net
        .segments_mut()
        .into_iter()
        .zip(grad.segments())
        .zip(state.first.segments_mut())
        .zip(state.second.segments_mut());
    for (((p, g), m), v) in blocks {
        adam_update(p, g, m, v, step, lr, b1, b2, eps);
    }
    state.step = step;
    Ok(())
}

/// Adam on flat slices; `step` is the 1-based index of this update.
#[allow(clippy::too_many_arguments)]
pub fn adam_update(
    params: &mut [f64],
    grad: &[f64],
    first: &mut [f64],
    second: &mut [f64],
    step: u64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
) {
    let t = step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for (((p, &g), m), v) in params.iter_mut().zip(grad).zip(first).zip(second) {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + epsilon);
    }
}
