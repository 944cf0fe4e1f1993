//! Newton's method with an explicitly assembled, symmetrized Hessian.

use crate::error::{Error, Result};
use crate::numerics::{RealMatrix, SymmetricFactorization};
use crate::optimizers::Objective;

/// Largest parameter count for which Newton assembles a dense Hessian.
pub const NEWTON_MAX_PARAMS: usize = 2000;

/// Relative diagonal shift applied when the Hessian is singular.
pub const NEWTON_REGULARIZATION: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonStep {
    pub theta: Vec<f64>,
    /// Diagonal shift that was needed, zero when the plain solve succeeded.
    pub shift: f64,
}

/// `θ' = θ − H⁻¹∇f`, retrying with `H + λI` (`λ = 1e-8·‖H‖max`) if `H` is singular.
pub fn newton_step<O: Objective + ?Sized>(obj: &O, theta: &[f64]) -> Result<NewtonStep> {
    if obj.dim() > NEWTON_MAX_PARAMS {
        return Err(Error::OverCap {
            what: "newton parameter count",
            size: obj.dim(),
            cap: NEWTON_MAX_PARAMS,
        });
    }
    let (_, grad) = obj.value_and_gradient(theta)?;
    let mut h = obj.hessian(theta)?;
    h.symmetrize();
    let (delta, shift) = solve_with_shift(&h, &grad)?;
    let theta = theta.iter().zip(&delta).map(|(t, d)| t - d).collect();
    Ok(NewtonStep { theta, shift })
}

fn solve_with_shift(h: &RealMatrix, grad: &[f64]) -> Result<(Vec<f64>, f64)> {
    match SymmetricFactorization::new(h).and_then(|f| f.solve(grad)) {
        Ok(x) => Ok((x, 0.0)),
        Err(Error::Singular(_)) => {
            let lambda = NEWTON_REGULARIZATION * h.max_abs().max(f64::MIN_POSITIVE);
            let mut shifted = h.clone();
            for i in 0..shifted.rows() {
                shifted[(i, i)] += lambda;
            }
            let x = SymmetricFactorization::new(&shifted)
                .and_then(|f| f.solve(grad))
                .map_err(|e| Error::Singular(format!("hessian singular after shift {lambda:e}: {e}")))?;
            Ok((x, lambda))
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizers::testfns::{Quadratic, Quartic};

    #[test]
    fn quadratic_solved_in_one_step() {
        let q = Quadratic::diagonal(&[1.0, 4.0, 0.5]);
        let step = newton_step(&q, &[3.0, -2.0, 7.0]).unwrap();
        for v in &step.theta {
            assert!(v.abs() < 1e-12);
        }
        assert_eq!(step.shift, 0.0);
    }

    #[test]
    fn quartic_hand_step() {
        let step = newton_step(&Quartic { dim: 1 }, &[1.0]).unwrap();
        assert!((step.theta[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn singular_hessian_is_shifted() {
        // Zero curvature along the second axis, zero gradient there too.
        let q = Quadratic::diagonal(&[2.0, 0.0]);
        let step = newton_step(&q, &[1.0, 5.0]).unwrap();
        assert!(step.shift > 0.0);
        assert!(step.theta[0].abs() < 1e-6);
        assert_eq!(step.theta[1], 5.0);
    }

    #[test]
    fn over_cap_rejected() {
        let r = newton_step(&Quartic { dim: NEWTON_MAX_PARAMS + 1 }, &vec![1.0; NEWTON_MAX_PARAMS + 1]);
        assert!(matches!(r, Err(Error::OverCap { .. })));
    }
}
