//! Cyclic Jacobi eigensolver for dense symmetric matrices.
//!
//! The full matrix is kept and rotated in place. A rotation in the `(p, q)`
//! plane is applied to rows `p` and `q` (contiguous), then mirrored into the
//! columns, so the working matrix stays exactly symmetric between rotations.
//! Eigenvectors are accumulated as rows of `Vᵀ` for the same reason.

use crate::error::{Error, Result};
use crate::numerics::matrix::{require_square, RealMatrix};

/// Sweep budget before giving up.
pub const MAX_SWEEPS: usize = 50;

/// Relative asymmetry accepted on input.
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Eigen-decomposition `m = V·diag(λ)·Vᵀ` with `λ` ascending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub eigenvalues: Vec<f64>,
    /// Column `j` is the unit eigenvector for `eigenvalues[j]`.
    pub eigenvectors: RealMatrix,
    pub sweeps: usize,
}

/// Eigenvalues and eigenvectors of a symmetric matrix.
///
/// Iterates until the off-diagonal Frobenius norm is at most `tol/2 · max|m_ij|`,
/// which bounds the reconstruction error `max |VΛVᵀ - m|` by `tol · max|m_ij|`
/// up to rounding.
pub fn symmetric_eigen(m: &RealMatrix, tol: f64) -> Result<SymmetricEigen> {
    let (values, vt, sweeps) = jacobi(m, tol, true)?;
    let vt = vt.expect("eigenvectors requested");
    let order = ascending_order(&values);
    let n = values.len();
    let mut eigenvectors = RealMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        eigenvectors.set_column(col, vt.row(src));
    }
    Ok(SymmetricEigen {
        eigenvalues: order.iter().map(|&i| values[i]).collect(),
        eigenvectors,
        sweeps,
    })
}

/// Ascending eigenvalues only; skips the eigenvector accumulation.
pub fn symmetric_eigenvalues(m: &RealMatrix, tol: f64) -> Result<Vec<f64>> {
    let (mut values, _, _) = jacobi(m, tol, false)?;
    values.sort_by(f64::total_cmp);
    Ok(values)
}

fn ascending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    idx
}

fn off_diagonal_norm(a: &RealMatrix) -> f64 {
    let n = a.rows();
    let mut sum = 0.0;
    for i in 0..n {
        for (j, v) in a.row(i).iter().enumerate() {
            if i != j {
                sum += v * v;
            }
        }
    }
    sum.sqrt()
}

type JacobiOutput = (Vec<f64>, Option<RealMatrix>, usize);

fn jacobi(m: &RealMatrix, tol: f64, want_vectors: bool) -> Result<JacobiOutput> {
    require_square(m, "symmetric_eigen")?;
    if !m.all_finite() {
        return Err(Error::NonFinite("symmetric_eigen input".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Rejected(format!("eigen tolerance {tol} must be positive")));
    }
    let asym = m.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::Rejected(format!(
            "matrix is not symmetric (relative asymmetry {asym:e})"
        )));
    }
    let n = m.rows();
    let mut a = m.clone();
    a.symmetrize();
    let mut vt = want_vectors.then(|| RealMatrix::identity(n));
    let target = 0.5 * tol * a.max_abs();

    for sweep in 0..=MAX_SWEEPS {
        let off = off_diagonal_norm(&a);
        if off <= target {
            let values = (0..n).map(|i| a[(i, i)]).collect();
            return Ok((values, vt, sweep));
        }
        if sweep == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps: MAX_SWEEPS,
                off_norm: off,
            });
        }
        // Early sweeps skip small pivots so large ones are annihilated first.
        let threshold = if sweep < 3 {
            0.2 * off / (n * n) as f64
        } else {
            0.0
        };
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let g = 100.0 * apq.abs();
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                if apq.abs() <= threshold || apq == 0.0 {
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                rotate(&mut a, p, q, c, s, t, apq);
                if let Some(vt) = vt.as_mut() {
                    rotate_rows(vt, p, q, c, s);
                }
            }
        }
    }
    unreachable!("sweep loop returns on its last iteration")
}

/// Applies `Jᵀ A J` for the rotation zeroing `a[p][q]`.
fn rotate(a: &mut RealMatrix, p: usize, q: usize, c: f64, s: f64, t: f64, apq: f64) {
    let n = a.rows();
    let app = a[(p, p)];
    let aqq = a[(q, q)];
    rotate_rows(a, p, q, c, s);
    // The row pass leaves the 2x2 block half-rotated; overwrite it exactly.
    a[(p, p)] = app - t * apq;
    a[(q, q)] = aqq + t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        if k != p && k != q {
            let vp = a[(p, k)];
            let vq = a[(q, k)];
            a[(k, p)] = vp;
            a[(k, q)] = vq;
        }
    }
}

fn rotate_rows(a: &mut RealMatrix, p: usize, q: usize, c: f64, s: f64) {
    let cols = a.cols();
    let data = a.as_mut_slice();
    let (lo, hi) = data.split_at_mut(q * cols);
    let row_p = &mut lo[p * cols..(p + 1) * cols];
    let row_q = &mut hi[..cols];
    for (x, y) in row_p.iter_mut().zip(row_q.iter_mut()) {
        let xp = *x;
        let xq = *y;
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{matmul, RngStream};

    fn random_symmetric(rng: &mut RngStream, n: usize) -> RealMatrix {
        let mut m = RealMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = rng.uniform(-1.0, 1.0).unwrap();
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    fn cofactor_det(m: &[Vec<f64>]) -> f64 {
        let n = m.len();
        if n == 1 {
            return m[0][0];
        }
        let mut det = 0.0;
        for col in 0..n {
            let minor: Vec<Vec<f64>> = m[1..]
                .iter()
                .map(|row| row.iter().enumerate().filter(|&(j, _)| j != col).map(|(_, &v)| v).collect())
                .collect();
            let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
            det += sign * m[0][col] * cofactor_det(&minor);
        }
        det
    }

    #[test]
    fn classic_two_by_two() {
        let m = RealMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = symmetric_eigen(&m, 1e-14).unwrap();
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn diagonal_input_gives_permuted_identity() {
        let m = RealMatrix::from_diagonal(&[3.0, -1.0, 2.0]);
        let e = symmetric_eigen(&m, 1e-12).unwrap();
        assert_eq!(e.eigenvalues, vec![-1.0, 2.0, 3.0]);
        let expected = RealMatrix::from_rows(&[
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
        ])
        .unwrap();
        assert_eq!(e.eigenvectors, expected);
        assert_eq!(e.sweeps, 0);
    }

    #[test]
    fn trace_and_cofactor_determinant_4x4() {
        let mut rng = RngStream::new(404);
        for _ in 0..10 {
            let m = random_symmetric(&mut rng, 4);
            let rows: Vec<Vec<f64>> = (0..4).map(|i| m.row(i).to_vec()).collect();
            let det = cofactor_det(&rows);
            let e = symmetric_eigen(&m, 1e-14).unwrap();
            let sum: f64 = e.eigenvalues.iter().sum();
            let prod: f64 = e.eigenvalues.iter().product();
            assert!((sum - m.trace()).abs() <= 1e-10 * m.trace().abs().max(1.0));
            assert!((prod - det).abs() <= 1e-8 * det.abs().max(1e-300), "{prod} vs {det}");
        }
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        let mut rng = RngStream::new(77);
        for &n in &[1, 2, 5, 17, 40, 100] {
            let m = random_symmetric(&mut rng, n);
            let tol = 1e-12;
            let e = symmetric_eigen(&m, tol).unwrap();
            assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            let v = &e.eigenvectors;
            let vtv = matmul(&v.transpose(), v).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!((vtv[(i, j)] - target).abs() < 1e-8);
                }
            }
            let lambda = RealMatrix::from_diagonal(&e.eigenvalues);
            let rec = matmul(&matmul(v, &lambda).unwrap(), &v.transpose()).unwrap();
            let scale = m.max_abs();
            for (x, y) in rec.as_slice().iter().zip(m.as_slice()) {
                assert!((x - y).abs() < tol * scale + 1e-13 * n as f64, "n={n}");
            }
            let trace_err = (e.eigenvalues.iter().sum::<f64>() - m.trace()).abs();
            assert!(trace_err <= 1e-10 * m.trace().abs().max(1.0), "n={n}: {trace_err}");
        }
    }

    #[test]
    fn eigenvalue_only_path_agrees() {
        let mut rng = RngStream::new(5);
        let m = random_symmetric(&mut rng, 30);
        let full = symmetric_eigen(&m, 1e-12).unwrap();
        let only = symmetric_eigenvalues(&m, 1e-12).unwrap();
        for (a, b) in full.eigenvalues.iter().zip(&only) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_square_and_asymmetric() {
        assert!(matches!(
            symmetric_eigen(&RealMatrix::zeros(2, 3), 1e-10),
            Err(Error::Rejected(_))
        ));
        let m = RealMatrix::from_rows(&[vec![1.0, 2.0], vec![2.1, 1.0]]).unwrap();
        assert!(matches!(symmetric_eigen(&m, 1e-10), Err(Error::Rejected(_))));
    }

    #[test]
    fn zero_matrix_is_trivially_diagonal() {
        let e = symmetric_eigen(&RealMatrix::zeros(3, 3), 1e-10).unwrap();
        assert_eq!(e.eigenvalues, vec![0.0; 3]);
    }
}
