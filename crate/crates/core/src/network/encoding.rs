//! Fourier-feature positional encoding of input coordinates.
//!
//! For input `x ∈ ℝᵈ` the embedding is
//! `[x, sin(b⁰πx₁), cos(b⁰πx₁), …, sin(b⁰πx_d), cos(b⁰πx_d), sin(b¹πx₁), …]`,
//! i.e. the raw coordinates followed, frequency by frequency and dimension by
//! dimension, by a sin/cos pair. Output width is `d + 2·d·num_frequencies`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_FREQUENCIES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionalEncoding {
    pub enabled: bool,
    pub num_frequencies: usize,
    pub base: f64,
}

impl Default for PositionalEncoding {
    fn default() -> Self {
        Self::disabled()
    }
}

impl PositionalEncoding {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            num_frequencies: DEFAULT_FREQUENCIES,
            base: 2.0,
        }
    }

    pub fn with_frequencies(num_frequencies: usize) -> Self {
        Self {
            enabled: true,
            num_frequencies,
            base: 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.enabled && !(self.base > 0.0 && self.base.is_finite()) {
            return Err(Error::Rejected(format!("encoding base {} must be positive", self.base)));
        }
        Ok(())
    }

    pub fn output_dim(&self, input_dim: usize) -> usize {
        if self.enabled {
            input_dim + 2 * input_dim * self.num_frequencies
        } else {
            input_dim
        }
    }

    fn frequency(&self, k: usize) -> f64 {
        self.base.powi(k as i32) * std::f64::consts::PI
    }

    /// Writes `γ(x)` into `out`, which must have length `output_dim(x.len())`.
    pub fn encode_into(&self, x: &[f64], out: &mut [f64]) {
        let d = x.len();
        debug_assert_eq!(out.len(), self.output_dim(d));
        out[..d].copy_from_slice(x);
        if !self.enabled {
            return;
        }
        let mut idx = d;
        for k in 0..self.num_frequencies {
            let f = self.frequency(k);
            for &xj in x {
                let (s, c) = (f * xj).sin_cos();
                out[idx] = s;
                out[idx + 1] = c;
                idx += 2;
            }
        }
    }

    pub fn encode(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.output_dim(x.len())];
        self.encode_into(x, &mut out);
        out
    }

    /// Pulls a gradient with respect to `γ(x)` back to one with respect to `x`.
    pub fn pullback(&self, x: &[f64], grad_encoded: &[f64]) -> Vec<f64> {
        let d = x.len();
        let mut g = grad_encoded[..d].to_vec();
        if !self.enabled {
            return g;
        }
        let mut idx = d;
        for k in 0..self.num_frequencies {
            let f = self.frequency(k);
            for (j, &xj) in x.iter().enumerate() {
                let (s, c) = (f * xj).sin_cos();
                g[j] += grad_encoded[idx] * f * c - grad_encoded[idx + 1] * f * s;
                idx += 2;
            }
        }
        g
    }
}
