use serde::{Deserialize, Serialize};
use wide::f64x4;

use crate::error::{Error, Result};

/// Default sine frequency.
pub const DEFAULT_OMEGA: f64 = 30.0;
/// Default Gaussian width.
pub const DEFAULT_SIGMA: f64 = 0.1;

/// Pointwise nonlinearity applied between affine layers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Activation {
    /// `max(0, z)`, with derivative 0 taken at the kink.
    Relu,
    Tanh,
    /// `sin(2π ω z)`.
    Sine { omega: f64 },
    /// `exp(-(z - μ)² / (2σ²))`.
    Gaussian { mu: f64, sigma: f64 },
}

impl Activation {
    pub fn sine() -> Self {
        Activation::Sine {
            omega: DEFAULT_OMEGA,
        }
    }

    pub fn gaussian() -> Self {
        Activation::Gaussian {
            mu: 0.0,
            sigma: DEFAULT_SIGMA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Activation::Sine { omega } if !(omega > 0.0 && omega.is_finite()) => {
                Err(Error::Rejected(format!("sine omega {omega} must be positive")))
            }
            Activation::Gaussian { sigma, mu } if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) => {
                Err(Error::Rejected(format!("gaussian sigma {sigma} must be positive")))
            }
            _ => Ok(()),
        }
    }

    /// Whether the activation is smooth everywhere.
    pub fn is_smooth(&self) -> bool {
        !matches!(self, Activation::Relu)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Sine { .. } => "sine",
            Activation::Gaussian { .. } => "gaussian",
        }
    }

    #[inline]
    pub fn value(&self, z: f64) -> f64 {
        match *self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Sine { omega } => sin_cos4(f64x4::splat(std::f64::consts::TAU * omega * z)).0.to_array()[0],
            Activation::Gaussian { mu, sigma } => {
                let u = (z - mu) / sigma;
                (-0.5 * u * u).exp()
            }
        }
    }

    /// Value and first derivative at `z`.
    #[inline]
    pub fn value_and_derivative(&self, z: f64) -> (f64, f64) {
        match *self {
            Activation::Relu => {
                if z > 0.0 {
                    (z, 1.0)
                } else {
                    (0.0, 0.0)
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                (t, 1.0 - t * t)
            }
            Activation::Sine { omega } => {
                let k = std::f64::consts::TAU * omega;
                let (s, c) = sin_cos4(f64x4::splat(k * z));
                (s.to_array()[0], k * c.to_array()[0])
            }
            Activation::Gaussian { mu, sigma } => {
                let u = (z - mu) / sigma;
                let g = (-0.5 * u * u).exp();
                (g, -u / sigma * g)
            }
        }
    }
    /// Applies [`Activation::value`] to every entry.
    pub fn apply(&self, z: &mut [f64]) {
        match *self {
            Activation::Sine { omega } => {
                let k = std::f64::consts::TAU * omega;
                for_lanes(z, |v| sin_cos4(v * k).0);
            }
            _ => z.iter_mut().for_each(|v| *v = self.value(*v)),
        }
    }

    /// Replaces every entry of `z` by its value and writes the derivative to `d`.
    pub fn apply_with_derivative(&self, z: &mut [f64], d: &mut [f64]) {
        assert_eq!(z.len(), d.len(), "activation derivative buffer");
        match *self {
            Activation::Sine { omega } => {
                let k = std::f64::consts::TAU * omega;
                let kv = f64x4::splat(k);
                let mut zc = z.chunks_exact_mut(4);
                let mut dc = d.chunks_exact_mut(4);
                for (zs, ds) in (&mut zc).zip(&mut dc) {
                    let (s, c) = sin_cos4(lanes(zs) * kv);
                    zs.copy_from_slice(&s.to_array());
                    ds.copy_from_slice(&(c * kv).to_array());
                }
                for (zi, di) in zc.into_remainder().iter_mut().zip(dc.into_remainder()) {
                    (*zi, *di) = self.value_and_derivative(*zi);
                }
            }
            _ => {
                for (zi, di) in z.iter_mut().zip(d.iter_mut()) {
                    (*zi, *di) = self.value_and_derivative(*zi);
                }
            }
        }
    }
}

/// Lane-wise sine and cosine; every lane is computed independently, so the
/// scalar and slice paths agree bit for bit.
#[inline]
fn sin_cos4(v: f64x4) -> (f64x4, f64x4) {
    v.sin_cos()
}

#[inline]
fn lanes(c: &[f64]) -> f64x4 {
    f64x4::from([c[0], c[1], c[2], c[3]])
}

fn for_lanes(z: &mut [f64], f: impl Fn(f64x4) -> f64x4) {
    let mut chunks = z.chunks_exact_mut(4);
    for c in &mut chunks {
        c.copy_from_slice(&f(lanes(c)).to_array());
    }
    for v in chunks.into_remainder() {
        *v = f(f64x4::splat(*v)).to_array()[0];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_central_differences() {
        let acts = [
            Activation::Tanh,
            Activation::Sine { omega: 1.3 },
            Activation::Gaussian { mu: 0.2, sigma: 0.7 },
            Activation::Relu,
        ];
        for act in acts {
            for &z in &[-0.9, -0.3, 0.15, 0.8] {
                let h = 1e-6;
                let fd = (act.value(z + h) - act.value(z - h)) / (2.0 * h);
                let (v, d) = act.value_and_derivative(z);
                assert_eq!(v, act.value(z));
                assert!((fd - d).abs() < 1e-7 * (1.0 + d.abs()), "{act:?} at {z}");
            }
        }
    }

    #[test]
    fn relu_kink_derivative_is_zero() {
        assert_eq!(Activation::Relu.value_and_derivative(0.0), (0.0, 0.0));
    }

    #[test]
    fn gaussian_peaks_at_mean() {
        let g = Activation::gaussian();
        assert_eq!(g.value(0.0), 1.0);
        assert!(g.value(0.1) < 1.0 && g.value(-0.1) == g.value(0.1));
    }

    #[test]
    fn invalid_hyperparameters_rejected() {
        assert!(Activation::Sine { omega: 0.0 }.validate().is_err());
        assert!(Activation::Gaussian { mu: 0.0, sigma: -1.0 }.validate().is_err());
        assert!(Activation::sine().validate().is_ok());
    }
}
