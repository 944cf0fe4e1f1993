//! Bunch–Kaufman `P A Pᵀ = L D Lᵀ` factorization of symmetric (possibly
//! indefinite) matrices, with 1×1 and 2×2 diagonal pivot blocks.

use crate::error::{check_dims, Error, Result};
use crate::numerics::matrix::{require_square, RealMatrix};

/// Pivots smaller than this times `max|a_ij|` count as singular.
pub const SINGULAR_RTOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy)]
enum Pivot {
    One,
    Two,
}

/// Factorization of a symmetric matrix that can solve many right-hand sides.
#[derive(Debug, Clone)]
pub struct SymmetricFactorization {
    n: usize,
    /// Unit lower factor below the diagonal, `D` blocks on and beside it.
    /// The trailing block is updated in full so it stays symmetric.
    lu: RealMatrix,
    /// `swaps[k] = r` means rows/cols `k` and `r` were exchanged at step `k`.
    swaps: Vec<usize>,
    pivots: Vec<(usize, Pivot)>,
}

impl SymmetricFactorization {
    pub fn new(m: &RealMatrix) -> Result<Self> {
        require_square(m, "symmetric factorization")?;
        if !m.all_finite() {
            return Err(Error::NonFinite("matrix to factorize".into()));
        }
        let n = m.rows();
        let mut a = m.clone();
        let alpha = (1.0 + 17f64.sqrt()) / 8.0;
        let tiny = SINGULAR_RTOL * m.max_abs();
        let mut swaps: Vec<usize> = (0..n).collect();
        let mut pivots = Vec::new();
        let mut k = 0;
        while k < n {
            let (lambda, r) = ((k + 1)..n)
                .map(|i| (a[(i, k)].abs(), i))
                .fold((0.0, k), |best, c| if c.0 > best.0 { c } else { best });
            let akk = a[(k, k)].abs();
            if akk.max(lambda) <= tiny {
                return Err(Error::Singular(format!("zero pivot column at {k}")));
            }
            let pivot = if akk >= alpha * lambda {
                Pivot::One
            } else {
                let sigma = (k..n)
                    .filter(|&j| j != r)
                    .map(|j| a[(r, j)].abs())
                    .fold(0.0, f64::max);
                if akk * sigma >= alpha * lambda * lambda {
                    Pivot::One
                } else if a[(r, r)].abs() >= alpha * sigma {
                    symmetric_swap(&mut a, k, r);
                    swaps[k] = r;
                    Pivot::One
                } else {
                    symmetric_swap(&mut a, k + 1, r);
                    swaps[k + 1] = r;
                    Pivot::Two
                }
            };
            match pivot {
                Pivot::One => {
                    let d = a[(k, k)];
                    if d.abs() <= tiny {
                        return Err(Error::Singular(format!("pivot {d:e} at {k}")));
                    }
                    for i in (k + 1)..n {
                        let aik = a[(i, k)];
                        if aik == 0.0 {
                            continue;
                        }
                        for j in (k + 1)..n {
                            let v = a[(i, j)] - aik * a[(j, k)] / d;
                            a[(i, j)] = v;
                        }
                    }
                    for i in (k + 1)..n {
                        a[(i, k)] /= d;
                    }
                    pivots.push((k, Pivot::One));
                    k += 1;
                }
                Pivot::Two => {
                    let d11 = a[(k, k)];
                    let d21 = a[(k + 1, k)];
                    let d22 = a[(k + 1, k + 1)];
                    let det = d11 * d22 - d21 * d21;
                    if det.abs() <= tiny * tiny {
                        return Err(Error::Singular(format!("2x2 pivot determinant {det:e} at {k}")));
                    }
                    let mut l = vec![(0.0, 0.0); n];
                    for (i, li) in l.iter_mut().enumerate().skip(k + 2) {
                        let x = a[(i, k)];
                        let y = a[(i, k + 1)];
                        *li = ((x * d22 - y * d21) / det, (y * d11 - x * d21) / det);
                    }
                    for i in (k + 2)..n {
                        let (l1, l2) = l[i];
                        for j in (k + 2)..n {
                            let v = a[(i, j)] - l1 * a[(j, k)] - l2 * a[(j, k + 1)];
                            a[(i, j)] = v;
                        }
                    }
                    for (i, &(l1, l2)) in l.iter().enumerate().skip(k + 2) {
                        a[(i, k)] = l1;
                        a[(i, k + 1)] = l2;
                    }
                    pivots.push((k, Pivot::Two));
                    k += 2;
                }
            }
        }
        Ok(Self {
            n,
            lu: a,
            swaps,
            pivots,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_dims("symmetric solve", self.n, b.len())?;
        let n = self.n;
        let a = &self.lu;
        let mut x = b.to_vec();
        for (k, &r) in self.swaps.iter().enumerate() {
            x.swap(k, r);
        }
        // L y = P b
        for &(k, piv) in &self.pivots {
            let width = match piv {
                Pivot::One => 1,
                Pivot::Two => 2,
            };
            for c in k..k + width {
                let xc = x[c];
                for (i, xi) in x.iter_mut().enumerate().skip(k + width) {
                    *xi -= a[(i, c)] * xc;
                }
            }
        }
        // D z = y
        for &(k, piv) in &self.pivots {
            match piv {
                Pivot::One => x[k] /= a[(k, k)],
                Pivot::Two => {
                    let (d11, d21, d22) = (a[(k, k)], a[(k + 1, k)], a[(k + 1, k + 1)]);
                    let det = d11 * d22 - d21 * d21;
                    let (u, v) = (x[k], x[k + 1]);
                    x[k] = (u * d22 - v * d21) / det;
                    x[k + 1] = (v * d11 - u * d21) / det;
                }
            }
        }
        // Lᵀ w = z
        for &(k, piv) in self.pivots.iter().rev() {
            let width = match piv {
                Pivot::One => 1,
                Pivot::Two => 2,
            };
            for c in k..k + width {
                let mut acc = x[c];
                for i in (k + width)..n {
                    acc -= a[(i, c)] * x[i];
                }
                x[c] = acc;
            }
        }
        for (k, &r) in self.swaps.iter().enumerate().rev() {
            x.swap(k, r);
        }
        Ok(x)
    }
}

/// Exchanges rows and columns `i` and `j`. Columns left of the pivot hold `L`
/// and move with their rows; the stale upper triangle there is never read.
fn symmetric_swap(a: &mut RealMatrix, i: usize, j: usize) {
    if i == j {
        return;
    }
    let n = a.rows();
    for c in 0..n {
        let tmp = a[(i, c)];
        a[(i, c)] = a[(j, c)];
        a[(j, c)] = tmp;
    }
    for r in 0..n {
        let tmp = a[(r, i)];
        a[(r, i)] = a[(r, j)];
        a[(r, j)] = tmp;
    }
}

/// Solves `m x = b` for symmetric `m`.
pub fn solve_symmetric(m: &RealMatrix, b: &[f64]) -> Result<Vec<f64>> {
    SymmetricFactorization::new(m)?.solve(b)
}
