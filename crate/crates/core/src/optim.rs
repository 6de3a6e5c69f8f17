//! AdamW with a cosine learning-rate schedule.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::num;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// First and second moment estimates plus the number of updates applied.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl OptimizerState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.m.len() != n || self.v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.m.len().min(self.v.len()),
            });
        }
        if !self.m.iter().chain(&self.v).all(|x| x.is_finite()) || self.v.iter().any(|&x| x < 0.0) {
            return Err(Error::NonFinite("optimizer moments".into()));
        }
        Ok(())
    }
}

/// Cosine decay from `base` at step 0 to 0 at `total` steps, without restarts.
pub fn cosine_lr(base: f64, step: u64, total: u64) -> f64 {
    if total == 0 {
        return base;
    }
    let progress = (step.min(total)) as f64 / total as f64;
    base * 0.5 * (1.0 + num::cos(core::f64::consts::PI * progress))
}

/// One AdamW update with learning rate `lr`; weight decay is decoupled and
/// scaled by `lr`.
pub fn adamw_step(params: &mut [f64], grads: &[f64], state: &mut OptimizerState, lr: f64, weight_decay: f64) -> Result<()> {
    if grads.len() != params.len() {
        return Err(Error::DimensionMismatch {
            expected: params.len(),
            got: grads.len(),
        });
    }
    state.validate(params.len())?;
    if !(lr >= 0.0) || !(weight_decay >= 0.0) {
        return Err(invalid("learning rate and weight decay must be nonnegative"));
    }
    if let Some(k) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite(alloc::format!("gradient entry {k}")));
    }
    state.step += 1;
    let t = state.step as f64;
    let c1 = 1.0 - num::pow(BETA1, t);
    let c2 = 1.0 - num::pow(BETA2, t);
    for k in 0..params.len() {
        let g = grads[k];
        state.m[k] = BETA1 * state.m[k] + (1.0 - BETA1) * g;
        state.v[k] = BETA2 * state.v[k] + (1.0 - BETA2) * g * g;
        if lr == 0.0 {
            continue;
        }
        let m_hat = state.m[k] / c1;
        let v_hat = state.v[k] / c2;
        params[k] -= lr * (m_hat / (num::sqrt(v_hat) + EPSILON) + weight_decay * params[k]);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_lr_keeps_params() {
        let mut p = vec![1.0, -2.0, 3.0];
        let mut s = OptimizerState::new(3);
        adamw_step(&mut p, &[0.5, 0.1, -1.0], &mut s, 0.0, 0.1).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
        assert_eq!(s.step, 1);
        assert!((s.m[0] - 0.05).abs() < 1e-15);
        assert!((s.v[2] - 0.001).abs() < 1e-15);
    }

    #[test]
    fn first_step_moves_by_lr() {
        // bias correction makes the first update lr * sign(g)
        let mut p = vec![0.0, 0.0];
        let mut s = OptimizerState::new(2);
        adamw_step(&mut p, &[3.0, -0.2], &mut s, 0.01, 0.0).unwrap();
        assert!((p[0] + 0.01).abs() < 1e-9);
        assert!((p[1] - 0.01).abs() < 1e-9);
    }

    #[test]
    fn decoupled_decay() {
        let mut p = vec![2.0];
        let mut s = OptimizerState::new(1);
        adamw_step(&mut p, &[0.0], &mut s, 0.1, 0.5).unwrap();
        assert!((p[0] - (2.0 - 0.1 * 0.5 * 2.0)).abs() < 1e-12);
    }

    #[test]
    fn minimizes_quadratic() {
        let mut p = vec![5.0, -3.0];
        let mut s = OptimizerState::new(2);
        for _ in 0..3000 {
            let g = [2.0 * (p[0] - 1.0), 2.0 * (p[1] + 2.0)];
            adamw_step(&mut p, &g, &mut s, 0.01, 0.0).unwrap();
        }
        assert!((p[0] - 1.0).abs() < 1e-2 && (p[1] + 2.0).abs() < 1e-2);
    }

    #[test]
    fn cosine_schedule_endpoints() {
        assert_eq!(cosine_lr(1e-3, 0, 100), 1e-3);
        assert!((cosine_lr(1e-3, 50, 100) - 5e-4).abs() < 1e-15);
        assert!(cosine_lr(1e-3, 100, 100).abs() < 1e-18);
        assert!(cosine_lr(1e-3, 150, 100).abs() < 1e-18);
        let mut prev = f64::INFINITY;
        for s in 0..=100 {
            let lr = cosine_lr(1.0, s, 100);
            assert!(lr <= prev);
            prev = lr;
        }
    }

    #[test]
    fn rejects_bad_gradients() {
        let mut p = vec![0.0];
        let mut s = OptimizerState::new(1);
        assert!(adamw_step(&mut p, &[f64::NAN], &mut s, 0.1, 0.0).is_err());
        assert!(adamw_step(&mut p, &[1.0, 2.0], &mut s, 0.1, 0.0).is_err());
        assert_eq!(s.step, 0);
    }
}
