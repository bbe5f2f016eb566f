//! Adam over a flat parameter vector. Both trainable models keep their
//! parameters in one dense `Vec<f64>`, so the optimizer, checkpointing and
//! finite-difference checks all share that layout.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    cfg: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n_params: usize, cfg: AdamConfig) -> Result<Self> {
        if !(cfg.lr >= 0.0 && cfg.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be finite and >= 0, got {}", cfg.lr)));
        }
        Ok(Adam {
            cfg,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        })
    }

    /// One update step; `params` and `grads` must have the optimizer's size.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let b1 = self.cfg.beta1;
        let b2 = self.cfg.beta2;
        let bias1 = 1.0 - b1.powi(self.t as i32);
        let bias2 = 1.0 - b2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            if !g.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite gradient component at flat index {i}"
                )));
            }
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g;
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g;
            let m_hat = self.m[i] / bias1;
            let v_hat = self.v[i] / bias2;
            params[i] -= self.cfg.lr * m_hat / (v_hat.sqrt() + self.cfg.epsilon);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_lr_leaves_params_unchanged() {
        let mut adam = Adam::new(3, AdamConfig::with_lr(0.0)).unwrap();
        let mut params = vec![1.0, -2.0, 0.5];
        let before = params.clone();
        adam.step(&mut params, &[0.3, -0.1, 10.0]).unwrap();
        assert_eq!(params, before);
    }

    #[test]
    fn step_moves_against_gradient() {
        let mut adam = Adam::new(1, AdamConfig::with_lr(0.1)).unwrap();
        let mut params = vec![1.0];
        adam.step(&mut params, &[1.0]).unwrap();
        assert!(params[0] < 1.0);
    }

    #[test]
    fn non_finite_gradient_is_an_error() {
        let mut adam = Adam::new(1, AdamConfig::with_lr(0.1)).unwrap();
        let mut params = vec![1.0];
        assert!(adam.step(&mut params, &[f64::NAN]).is_err());
    }
}
