//! Central finite differences over every network parameter. Only meant as a
//! test oracle for the analytic gradients.

use super::net::{Gradient, ProjectionNet};
use crate::error::{Error, Result};

pub fn finite_diff_grad<F>(mut loss: F, net: &ProjectionNet, h: f64) -> Result<Gradient>
where
    F: FnMut(&ProjectionNet) -> Result<f64>,
{
    if h.is_nan() || h <= 0.0 {
        return Err(Error::Invalid(format!("step must be positive, got {h}")));
    }
    let mut probe = net.clone();
    let mut grad = net.zeros_like();
    for block in 0..4 {
        let len = net.segments()[block].len();
        for i in 0..len {
            let orig = net.segments()[block][i];
            probe.segments_mut()[block][i] = orig + h;
            let plus = loss(&probe)?;
            probe.segments_mut()[block][i] = orig - h;
            let minus = loss(&probe)?;
            probe.segments_mut()[block][i] = orig;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFinite("loss evaluation"));
            }
            grad.segments_mut()[block][i] = (plus - minus) / (2.0 * h);
        }
    }
    Ok(grad)
}

/// Largest elementwise `|a - b| / max(|a|, |b|, floor)` over all parameters.
pub fn max_relative_error(a: &Gradient, b: &Gradient, floor: f64) -> f64 {
    a.segments()
        .iter()
        .zip(b.segments())
        .flat_map(|(x, y)| x.iter().zip(y.iter()))
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_in_one_parameter() {
        let mut net = ProjectionNet::zeros(1, 1, 1);
        net.w1.set(0, 0, 3.0);
        let g = finite_diff_grad(|n| Ok(0.5 * n.w1.get(0, 0).powi(2)), &net, 1e-5).unwrap();
        assert!((g.w1.get(0, 0) - 3.0).abs() < 1e-7);
        assert_eq!(g.b1[0], 0.0);
    }

    #[test]
    fn constant_loss_has_zero_gradient() {
        let net = ProjectionNet::zeros(2, 3, 2);
        let g = finite_diff_grad(|_| Ok(4.2), &net, 1e-5).unwrap();
        assert!(g.segments().iter().all(|s| s.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn non_finite_loss_is_an_error() {
        let net = ProjectionNet::zeros(1, 1, 1);
        assert!(finite_diff_grad(|_| Ok(f64::NAN), &net, 1e-5).is_err());
        assert!(finite_diff_grad(|_| Ok(0.0), &net, 0.0).is_err());
    }
}
