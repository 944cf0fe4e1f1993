//! Seeded random streams.
//!
//! Bits come from ChaCha8 keyed by the 64-bit seed, which is stable across
//! platforms and releases. Floats are derived from the bits with fixed
//! transforms so the draw sequence is a pure function of the seed:
//!
//! * `uniform(a, b)`: the top 53 bits of one `u64` give `u ∈ [0, 1)`,
//!   returned as `a + (b - a)·u` (pulled back below `b` if rounding lands on it).
//! * `normal(μ, σ)`: Box–Muller on two uniforms, keeping only the cosine
//!   branch, `μ + σ·√(-2 ln(1 - u₁))·cos(2π u₂)`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Deterministic single-owner random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn unit(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, a: f64, b: f64) -> Result<f64> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Rejected(format!("uniform range [{a}, {b}) is empty")));
        }
        let x = a + (b - a) * self.unit();
        Ok(if x < b { x } else { b.next_down_compat() })
    }

    pub fn normal(&mut self, mu: f64, sigma: f64) -> Result<f64> {
        if !(sigma > 0.0) || !mu.is_finite() || !sigma.is_finite() {
            return Err(Error::Rejected(format!("normal sigma {sigma} must be positive")));
        }
        let u1 = self.unit();
        let u2 = self.unit();
        let radius = (-2.0 * (1.0 - u1).ln()).sqrt();
        Ok(mu + sigma * radius * (std::f64::consts::TAU * u2).cos())
    }

    /// Uniform integer in `0..n` by rejection, so there is no modulo bias.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index range must be non-empty");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.inner.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }

    /// `count` distinct indices from `0..n`, in ascending order.
    pub fn sample_without_replacement(&mut self, n: usize, count: usize) -> Vec<usize> {
        let count = count.min(n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..count {
            let j = i + self.index(n - i);
            pool.swap(i, j);
        }
        let mut chosen = pool[..count].to_vec();
        chosen.sort_unstable();
        chosen
    }
}

trait NextDown {
    fn next_down_compat(self) -> Self;
}

impl NextDown for f64 {
    fn next_down_compat(self) -> f64 {
        if self > 0.0 {
            f64::from_bits(self.to_bits() - 1)
        } else if self == 0.0 {
            -f64::from_bits(1)
        } else {
            f64::from_bits(self.to_bits() + 1)
        }
    }
}
