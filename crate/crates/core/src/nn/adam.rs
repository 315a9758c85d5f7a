use serde::{Deserialize, Serialize};

use super::params::ParamStore;
use super::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    t: i32,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl Adam {
    pub fn new(store: &ParamStore, config: AdamConfig) -> Self {
        let zeros: Vec<Tensor> = store
            .tensors()
            .iter()
            .map(|t| Tensor::zeros(t.rows, t.cols))
            .collect();
        Adam {
            config,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn step(&mut self, store: &mut ParamStore, grads: &[Tensor]) {
        assert_eq!(grads.len(), store.len(), "one gradient per parameter");
        self.t += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let c1 = 1.0 - beta1.powi(self.t);
        let c2 = 1.0 - beta2.powi(self.t);
        for (k, p) in store.tensors_mut().iter_mut().enumerate() {
            let g = &grads[k];
            assert_eq!(g.shape(), p.shape(), "gradient shape");
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..p.data.len() {
                m.data[i] = beta1 * m.data[i] + (1.0 - beta1) * g.data[i];
                v.data[i] = beta2 * v.data[i] + (1.0 - beta2) * g.data[i] * g.data[i];
                let mhat = m.data[i] / c1;
                let vhat = v.data[i] / c2;
                p.data[i] -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_store(v: f64) -> ParamStore {
        let mut s = ParamStore::new();
        s.add("p", Tensor::scalar(v));
        s
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut s = scalar_store(0.7);
        let mut adam = Adam::new(&s, AdamConfig::default());
        for _ in 0..5 {
            adam.step(&mut s, &[Tensor::scalar(0.0)]);
        }
        assert_eq!(s.tensors()[0].item(), 0.7);
    }

    #[test]
    fn constant_gradient_trace() {
        // With a constant gradient, the bias-corrected step is lr·1/(1+eps) every time.
        let mut s = scalar_store(1.0);
        let mut adam = Adam::new(&s, AdamConfig::default());
        let mut prev = 1.0;
        for k in 1..=10 {
            adam.step(&mut s, &[Tensor::scalar(1.0)]);
            let now = s.tensors()[0].item();
            assert!(now < prev);
            let expected = 1.0 - k as f64 * 1e-3 / (1.0 + 1e-8);
            assert!((now - expected).abs() < 1e-12, "{now} vs {expected}");
            prev = now;
        }
    }
}
