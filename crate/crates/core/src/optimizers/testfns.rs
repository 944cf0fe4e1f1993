//! Closed-form objectives with known minimizers, for exercising the optimizers.

use crate::error::{check_dims, Result};
use crate::numerics::vector::dot;
use crate::numerics::{matvec, RealMatrix, RngStream};
use crate::optimizers::Objective;

/// `f(θ) = ½ θᵀAθ − bᵀθ` with symmetric `A`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub a: RealMatrix,
    pub b: Vec<f64>,
}

impl Quadratic {
    pub fn new(a: RealMatrix, b: Vec<f64>) -> Result<Self> {
        check_dims("Quadratic", a.rows(), b.len())?;
        Ok(Self { a, b })
    }

    /// `½ θᵀ diag(d) θ`.
    pub fn diagonal(d: &[f64]) -> Self {
        Self {
            a: RealMatrix::from_diagonal(d),
            b: vec![0.0; d.len()],
        }
    }

    /// `A = Q·diag(λ)·Qᵀ` with `λᵢ` uniform in `[1, 10)` and `Q` a random
    /// orthogonal matrix (Gram–Schmidt on Gaussian columns), plus a random
    /// linear term `b` uniform in `[−1, 1)`.
    pub fn random_spd(n: usize, seed: u64) -> Self {
        Self::random_with_spectrum(n, 1.0, 10.0, seed)
    }

    /// As [`Quadratic::random_spd`] with eigenvalues uniform in `[lo, hi)`.
    pub fn random_with_spectrum(n: usize, lo: f64, hi: f64, seed: u64) -> Self {
        let mut rng = RngStream::new(seed);
        let mut q: Vec<Vec<f64>> = Vec::with_capacity(n);
        while q.len() < n {
            let mut v: Vec<f64> = (0..n).map(|_| rng.normal(0.0, 1.0).expect("valid sigma")).collect();
            for u in &q {
                let c = dot(u, &v);
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= c * ui;
                }
            }
            let len = dot(&v, &v).sqrt();
            if len > 1e-6 {
                q.push(v.iter().map(|x| x / len).collect());
            }
        }
        let lambda: Vec<f64> = (0..n).map(|_| rng.uniform(lo, hi).expect("valid range")).collect();
        let mut a = RealMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = 0.0;
                for k in 0..n {
                    s += q[k][i] * lambda[k] * q[k][j];
                }
                a[(i, j)] = s;
                a[(j, i)] = s;
            }
        }
        let b = (0..n).map(|_| rng.uniform(-1.0, 1.0).expect("valid range")).collect();
        Self { a, b }
    }

    /// The unique minimizer `A⁻¹b`.
    pub fn minimizer(&self) -> Result<Vec<f64>> {
        crate::numerics::solve_symmetric(&self.a, &self.b)
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value_and_gradient(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let ax = matvec(&self.a, theta)?;
        let mut f = 0.0;
        for i in 0..theta.len() {
            f += 0.5 * theta[i] * ax[i] - self.b[i] * theta[i];
        }
        let g = ax.iter().zip(&self.b).map(|(x, b)| x - b).collect();
        Ok((f, g))
    }

    fn hessian(&self, _theta: &[f64]) -> Result<RealMatrix> {
        Ok(self.a.clone())
    }
}

/// `f(x, y) = (1 − x)² + 100 (y − x²)²`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rosenbrock;

impl Objective for Rosenbrock {
    fn dim(&self) -> usize {
        2
    }

    fn value_and_gradient(&self, t: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_dims("Rosenbrock", 2, t.len())?;
        let (x, y) = (t[0], t[1]);
        let f = (1.0 - x).powi(2) + 100.0 * (y - x * x).powi(2);
        let gx = -2.0 * (1.0 - x) - 400.0 * x * (y - x * x);
        let gy = 200.0 * (y - x * x);
        Ok((f, vec![gx, gy]))
    }

    fn hessian(&self, t: &[f64]) -> Result<RealMatrix> {
        let (x, y) = (t[0], t[1]);
        RealMatrix::from_rows(&[
            vec![2.0 - 400.0 * (y - x * x) + 800.0 * x * x, -400.0 * x],
            vec![-400.0 * x, 200.0],
        ])
    }
}

/// `f(θ) = Σ θᵢ⁴`.
#[derive(Debug, Clone, Copy)]
pub struct Quartic {
    pub dim: usize,
}

impl Objective for Quartic {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value_and_gradient(&self, t: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok((t.iter().map(|v| v.powi(4)).sum(), t.iter().map(|v| 4.0 * v.powi(3)).collect()))
    }

    fn hessian(&self, t: &[f64]) -> Result<RealMatrix> {
        Ok(RealMatrix::from_diagonal(&t.iter().map(|v| 12.0 * v * v).collect::<Vec<_>>()))
    }
}
