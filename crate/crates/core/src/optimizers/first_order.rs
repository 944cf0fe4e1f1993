//! Adam and plain gradient descent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let betas_ok = (0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2);
        if !(self.lr > 0.0 && self.eps > 0.0 && betas_ok) {
            return Err(Error::Rejected(format!("invalid adam config {self:?}")));
        }
        Ok(())
    }
}

/// Bias-corrected first and second moment estimates.
#[derive(Debug, Clone)]
pub struct AdamState {
    cfg: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
}

impl AdamState {
    pub fn new(dim: usize, cfg: AdamConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        })
    }

    pub fn steps(&self) -> u32 {
        self.t
    }

    /// Applies one update to `theta` in place and returns the step's 2-norm.
    pub fn step(&mut self, theta: &mut [f64], grad: &[f64]) -> f64 {
        let AdamConfig { lr, beta1, beta2, eps } = self.cfg;
        self.t += 1;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        let mut step_sq = 0.0;
        for i in 0..theta.len() {
            let g = grad[i];
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            let d = lr * m_hat / (v_hat.sqrt() + eps);
            theta[i] -= d;
            step_sq += d * d;
        }
        step_sq.sqrt()
    }
}

/// `θ ← θ − lr·∇f`; returns the step's 2-norm.
pub fn gd_step(theta: &mut [f64], grad: &[f64], lr: f64) -> f64 {
    let mut step_sq = 0.0;
    for (t, g) in theta.iter_mut().zip(grad) {
        let d = lr * g;
        *t -= d;
        step_sq += d * d;
    }
    step_sq.sqrt()
}
