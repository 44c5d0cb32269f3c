//! Adam with bias correction.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::tensor::{dim_err, Result, Tensor};

pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-2, beta1: 0.9, beta2: 0.999, eps: ADAM_EPS }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T: Scalar> {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(config: AdamConfig, shapes: &[usize]) -> Self {
        Self {
            config,
            step: 0,
            m: shapes.iter().map(|n| vec![T::zero(); *n]).collect(),
            v: shapes.iter().map(|n| vec![T::zero(); *n]).collect(),
        }
    }

    pub fn for_params(config: AdamConfig, params: &[&Tensor<T>]) -> Self {
        let sizes: Vec<usize> = params.iter().map(|p| p.numel()).collect();
        Self::new(config, &sizes)
    }
}

/// One Adam update of `params` in place. A negative learning rate is a
/// contract violation; zero leaves parameters untouched.
pub fn adam_step<T: Scalar>(params: &mut [&mut Tensor<T>], grads: &[&[T]], state: &mut AdamState<T>) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(dim_err(
            "adam_step",
            format!("{} params, {} grads, {} moment buffers", params.len(), grads.len(), state.m.len()),
        ));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.numel() != g.len() || state.m[i].len() != g.len() {
            return Err(dim_err("adam_step", format!("parameter {i}: {} values vs {} grads", p.numel(), g.len())));
        }
    }
    let cfg = state.config;
    if !(cfg.lr >= 0.0) {
        return Err(crate::tensor::TensorError::Contract(format!("learning rate {} must be >= 0", cfg.lr)));
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (T::c(cfg.beta1), T::c(cfg.beta2));
    let bc1 = T::one() - T::c(cfg.beta1.powi(t));
    let bc2 = T::one() - T::c(cfg.beta2.powi(t));
    let lr = T::c(cfg.lr);
    let eps = T::c(cfg.eps);
    for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let m = &mut state.m[i];
        let v = &mut state.v[i];
        for (k, w) in p.data_mut().iter_mut().enumerate() {
            let gk = g[k];
            m[k] = b1 * m[k] + (T::one() - b1) * gk;
            v[k] = b2 * v[k] + (T::one() - b2) * gk * gk;
            if cfg.lr == 0.0 {
                continue;
            }
            let mhat = m[k] / bc1;
            let vhat = v[k] / bc2;
            *w -= lr * mhat / (vhat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = Tensor::<f64>::vector(vec![1.0, -2.0]).unwrap();
        let before = p.clone();
        let mut st = AdamState::for_params(AdamConfig::default(), &[&p]);
        for _ in 0..10 {
            adam_step(&mut [&mut p], &[&[0.0, 0.0]], &mut st).unwrap();
        }
        assert_eq!(p.data(), before.data());
        assert_eq!(st.step, 10);
    }

    #[test]
    fn constant_gradient_moves_against_sign() {
        let mut p = Tensor::<f64>::vector(vec![0.0, 0.0]).unwrap();
        let mut st = AdamState::for_params(AdamConfig::default(), &[&p]);
        for _ in 0..50 {
            adam_step(&mut [&mut p], &[&[0.7, -3.0]], &mut st).unwrap();
        }
        assert!(p.data()[0] < 0.0);
        assert!(p.data()[1] > 0.0);
    }

    #[test]
    fn quadratic_converges() {
        let mut x = Tensor::<f64>::vector(vec![0.0]).unwrap();
        let cfg = AdamConfig { lr: 0.1, ..AdamConfig::default() };
        let mut st = AdamState::for_params(cfg, &[&x]);
        for _ in 0..500 {
            let g = 2.0 * (x.data()[0] - 3.0);
            adam_step(&mut [&mut x], &[&[g]], &mut st).unwrap();
        }
        assert!((x.data()[0] - 3.0).abs() < 0.01, "x = {}", x.data()[0]);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut p = Tensor::<f64>::vector(vec![0.0, 0.0]).unwrap();
        let mut st = AdamState::for_params(AdamConfig::default(), &[&p]);
        assert!(adam_step(&mut [&mut p], &[&[1.0]], &mut st).is_err());
        assert_eq!(st.step, 0);
    }
}
