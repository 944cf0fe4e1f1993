//! Dense BFGS inverse-Hessian update.

use crate::numerics::RealMatrix;
use crate::numerics::vector::{dot, norm_inf};

/// Pairs with `yᵀs` at or below this are not used for updates.
pub const CURVATURE_EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum BfgsUpdate {
    Applied(RealMatrix),
    /// `yᵀs` failed the curvature threshold; the matrix is unchanged.
    Skipped { ys: f64 },
}

/// `M⁺ = (I − ρ y sᵀ)ᵀ M (I − ρ y sᵀ) + ρ s sᵀ` with `ρ = 1/(yᵀs)`.
///
/// Expanded as `M − ρ(s·(My)ᵀ + (My)·sᵀ) + (ρ²·yᵀMy + ρ) s sᵀ`, which needs
/// a single matrix-vector product. `M` is assumed symmetric.
pub fn bfgs_update(m: &RealMatrix, s: &[f64], y: &[f64], curvature_eps: f64) -> BfgsUpdate {
    let ys = dot(y, s);
    if !(ys > curvature_eps) {
        return BfgsUpdate::Skipped { ys };
    }
    let rho = 1.0 / ys;
    let n = s.len();
    let my: Vec<f64> = (0..n).map(|i| dot(m.row(i), y)).collect();
    let ymy = dot(y, &my);
    let coef = rho * rho * ymy + rho;
    let mut out = m.clone();
    for i in 0..n {
        let row = out.row_mut(i);
        for j in 0..n {
            row[j] += -rho * (s[i] * my[j] + my[i] * s[j]) + coef * (s[i] * s[j]);
        }
    }
    BfgsUpdate::Applied(out)
}

/// Relative secant residual `‖M y − s‖∞ / ‖s‖∞`.
pub fn secant_residual(m: &RealMatrix, s: &[f64], y: &[f64]) -> f64 {
    let scale = norm_inf(s).max(f64::MIN_POSITIVE);
    let worst = (0..s.len())
        .map(|i| (dot(m.row(i), y) - s[i]).abs())
        .fold(0.0, f64::max);
    worst / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{matvec, symmetric_eigenvalues, RngStream};

    fn random_pair(rng: &mut RngStream, n: usize) -> (Vec<f64>, Vec<f64>) {
        loop {
            let s: Vec<f64> = (0..n).map(|_| rng.normal(0.0, 1.0).unwrap()).collect();
            let y: Vec<f64> = s.iter().map(|v| v + 0.3 * rng.normal(0.0, 1.0).unwrap()).collect();
            if dot(&s, &y) > 0.1 {
                return (s, y);
            }
        }
    }

    #[test]
    fn identity_is_fixed_point_when_s_equals_y() {
        let s = vec![0.3, -1.2, 2.0];
        match bfgs_update(&RealMatrix::identity(3), &s, &s, CURVATURE_EPS) {
            BfgsUpdate::Applied(m) => {
                let id = RealMatrix::identity(3);
                for (a, b) in m.as_slice().iter().zip(id.as_slice()) {
                    assert!((a - b).abs() < 1e-15);
                }
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn secant_condition_and_positive_definiteness() {
        let mut rng = RngStream::new(31);
        let n = 6;
        let mut m = RealMatrix::identity(n);
        for _ in 0..15 {
            let (s, y) = random_pair(&mut rng, n);
            m = match bfgs_update(&m, &s, &y, CURVATURE_EPS) {
                BfgsUpdate::Applied(next) => next,
                other => panic!("unexpected {other:?}"),
            };
            assert!(secant_residual(&m, &s, &y) < 1e-12);
            let eig = symmetric_eigenvalues(&m, 1e-12).unwrap();
            assert!(eig[0] > 0.0, "lost positive definiteness: {eig:?}");
            assert_eq!(m.asymmetry(), 0.0);
        }
    }

    #[test]
    fn nonpositive_curvature_is_skipped() {
        let m = RealMatrix::identity(2);
        assert!(matches!(
            bfgs_update(&m, &[1.0, 0.0], &[-1.0, 0.0], CURVATURE_EPS),
            BfgsUpdate::Skipped { .. }
        ));
        assert!(matches!(
            bfgs_update(&m, &[1e-6, 0.0], &[1e-6, 0.0], CURVATURE_EPS),
            BfgsUpdate::Skipped { .. }
        ));
    }

    #[test]
    fn exact_line_search_recovers_inverse_hessian_in_two_steps() {
        // f = ½ xᵀ A x on ℝ²; with exact line searches BFGS terminates and the
        // final M equals A⁻¹.
        let a = RealMatrix::from_rows(&[vec![3.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let mut x = vec![1.0, -2.0];
        let mut m = RealMatrix::identity(2);
        let grad = |x: &[f64]| matvec(&a, x).unwrap();
        for _ in 0..2 {
            let g = grad(&x);
            let d: Vec<f64> = matvec(&m, &g).unwrap().iter().map(|v| -v).collect();
            let ad = matvec(&a, &d).unwrap();
            let alpha = -dot(&g, &d) / dot(&d, &ad);
            let s: Vec<f64> = d.iter().map(|v| alpha * v).collect();
            let x_new: Vec<f64> = x.iter().zip(&s).map(|(a, b)| a + b).collect();
            let y: Vec<f64> = grad(&x_new).iter().zip(&g).map(|(a, b)| a - b).collect();
            m = match bfgs_update(&m, &s, &y, CURVATURE_EPS) {
                BfgsUpdate::Applied(next) => next,
                other => panic!("unexpected {other:?}"),
            };
            x = x_new;
        }
        let inv = [[0.4, -0.2], [-0.2, 0.6]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((m[(i, j)] - inv[i][j]).abs() < 1e-10, "{:?}", m);
            }
        }
    }
}
