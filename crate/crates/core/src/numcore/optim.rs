//! Adam, global-norm clipping and the learning-rate schedule.

use super::{Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First and second moments per parameter plus the step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState<T> {
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
    pub step: u64,
    pub config: AdamConfig,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(params: &[Tensor<T>]) -> Self {
        OptimizerState {
            m: params.iter().map(|p| vec![T::zero(); p.len()]).collect(),
            v: params.iter().map(|p| vec![T::zero(); p.len()]).collect(),
            step: 0,
            config: AdamConfig::default(),
        }
    }
}

/// One bias-corrected Adam update. Parameters without a gradient are
/// treated as having a zero gradient.
pub fn adam_step<T: Scalar>(params: &mut [Tensor<T>], grads: &[Option<Vec<T>>], state: &mut OptimizerState<T>, lr: f64) {
    state.step += 1;
    let AdamConfig { beta1, beta2, eps } = state.config;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    let (b1, b2) = (T::of(beta1), T::of(beta2));
    let (step, eps) = (T::of(lr / c1), T::of(eps));
    let c2 = T::of(c2);
    for (k, p) in params.iter_mut().enumerate() {
        let (m, v) = (&mut state.m[k], &mut state.v[k]);
        let g = grads.get(k).and_then(|g| g.as_deref());
        for j in 0..p.data.len() {
            let gj = g.map_or(T::zero(), |g| g[j]);
            m[j] = b1 * m[j] + (T::one() - b1) * gj;
            v[j] = b2 * v[j] + (T::one() - b2) * gj * gj;
            p.data[j] -= step * m[j] / ((v[j] / c2).sqrt() + eps);
        }
    }
}

/// Rescales all gradients so their joint L2 norm is at most `max_norm`;
/// returns the norm before clipping.
pub fn clip_global_norm<T: Scalar>(grads: &mut [Option<Vec<T>>], max_norm: f64) -> f64 {
    let sq: f64 = grads.iter().flatten().flat_map(|g| g.iter()).map(|x| x.to_f64().unwrap().powi(2)).sum();
    let norm = sq.sqrt();
    if norm > max_norm {
        let s = T::of(max_norm / norm);
        for g in grads.iter_mut().flatten() {
            for x in g.iter_mut() {
                *x *= s;
            }
        }
    }
    norm
}

/// `1e-4 * 0.97^epoch`.
pub fn lr_schedule(epoch: u32) -> f64 {
    1e-4 * 0.97f64.powi(epoch as i32)
}
