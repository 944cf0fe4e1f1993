//! Hessian-vector products by central differences of the analytic gradient,
//! and dense Hessians assembled from them column by column.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::network::{NetworkSpec, ParamVector, TrainingSet};
use crate::numerics::vector::{all_finite, norm2};
use crate::numerics::RealMatrix;
use crate::optimizers::{NetworkObjective, Objective};

/// Largest parameter count for which a dense Hessian is assembled.
pub const HESSIAN_MAX_PARAMS: usize = 2500;

/// Directions shorter than this are rejected.
pub const MIN_DIRECTION_NORM: f64 = 1e-20;

/// Base of the difference step `h = 1e-5·(1 + ‖θ‖)`.
pub const HVP_REL_STEP: f64 = 1e-5;

/// Asymmetry above which a smooth-activation Hessian is suspect.
pub const SMOOTH_ASYMMETRY_LIMIT: f64 = 1e-3;

pub fn hvp_step(theta: &[f64]) -> f64 {
    HVP_REL_STEP * (1.0 + norm2(theta))
}

/// `H(θ)·v ≈ (∇f(θ + h v̂) − ∇f(θ − h v̂))·‖v‖ / (2h)`.
pub fn hvp_objective<O: Objective + ?Sized>(obj: &O, theta: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    crate::error::check_dims("hvp direction", theta.len(), v.len())?;
    let v_norm = norm2(v);
    if !(v_norm > MIN_DIRECTION_NORM) {
        return Err(Error::Rejected(format!("hvp direction norm {v_norm:e} is too small")));
    }
    let h = hvp_step(theta);
    let shifted = |sign: f64| -> Vec<f64> { theta.iter().zip(v).map(|(t, vi)| t + sign * h * (vi / v_norm)).collect() };
    let (_, gp) = obj.value_and_gradient(&shifted(1.0))?;
    let (_, gm) = obj.value_and_gradient(&shifted(-1.0))?;
    let scale = v_norm / (2.0 * h);
    let out: Vec<f64> = gp.iter().zip(&gm).map(|(a, b)| (a - b) * scale).collect();
    if !all_finite(&out) {
        return Err(Error::NonFinite("hessian-vector product".into()));
    }
    Ok(out)
}

pub fn hvp(spec: &NetworkSpec, params: &ParamVector, ts: &TrainingSet, v: &[f64]) -> Result<Vec<f64>> {
    hvp_objective(&NetworkObjective::new(spec, ts)?, &params.flat, v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HessianReport {
    /// Symmetrized `(H + Hᵀ)/2`.
    pub matrix: RealMatrix,
    /// `‖H − Hᵀ‖max / ‖H‖max` before symmetrizing.
    pub asymmetry: f64,
}

/// Dense Hessian whose column `j` is `hvp(e_j)`.
pub fn full_hessian_objective<O: Objective + Sync + ?Sized>(obj: &O, theta: &[f64]) -> Result<HessianReport> {
    let p = theta.len();
    if p > HESSIAN_MAX_PARAMS {
        return Err(Error::OverCap {
            what: "hessian parameter count",
            size: p,
            cap: HESSIAN_MAX_PARAMS,
        });
    }
    let columns: Vec<Vec<f64>> = (0..p)
        .into_par_iter()
        .map(|j| {
            let mut e = vec![0.0; p];
            e[j] = 1.0;
            hvp_objective(obj, theta, &e)
        })
        .collect::<Result<_>>()?;
    let mut matrix = RealMatrix::zeros(p, p);
    for (j, col) in columns.iter().enumerate() {
        matrix.set_column(j, col);
    }
    let asymmetry = matrix.asymmetry();
    matrix.symmetrize();
    Ok(HessianReport { matrix, asymmetry })
}

pub fn full_hessian(spec: &NetworkSpec, params: &ParamVector, ts: &TrainingSet) -> Result<HessianReport> {
    if spec.param_count() > HESSIAN_MAX_PARAMS {
        return Err(Error::OverCap {
            what: "hessian parameter count",
            size: spec.param_count(),
            cap: HESSIAN_MAX_PARAMS,
        });
    }
    full_hessian_objective(&NetworkObjective::new(spec, ts)?, &params.flat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{init_params, Activation};
    use crate::numerics::{matvec, RngStream};
    use crate::optimizers::testfns::Quadratic;

    fn tiny_sine() -> (NetworkSpec, ParamVector, TrainingSet) {
        let spec = NetworkSpec::new(2, vec![4, 3], 1, Activation::Sine { omega: 1.0 }).with_seed(4);
        let params = init_params(&spec).unwrap();
        let mut rng = RngStream::new(9);
        let n = 12;
        let x: Vec<f64> = (0..2 * n).map(|_| rng.uniform(-1.0, 1.0).unwrap()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.uniform(0.0, 1.0).unwrap()).collect();
        let ts = TrainingSet::new(RealMatrix::from_vec(n, 2, x).unwrap(), RealMatrix::from_vec(n, 1, y).unwrap()).unwrap();
        (spec, params, ts)
    }

    #[test]
    fn quadratic_hvp_is_exact_product() {
        let q = Quadratic::random_spd(6, 1);
        let v = [0.3, -1.0, 2.0, 0.0, 0.5, 1.5];
        let hv = hvp_objective(&q, &[0.1; 6], &v).unwrap();
        let want = matvec(&q.a, &v).unwrap();
        for (a, b) in hv.iter().zip(&want) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn tiny_direction_rejected() {
        let q = Quadratic::diagonal(&[1.0, 2.0]);
        assert!(matches!(hvp_objective(&q, &[0.0, 0.0], &[1e-30, 0.0]), Err(Error::Rejected(_))));
    }

    #[test]
    fn quadratic_hessian_recovers_matrix() {
        let q = Quadratic::diagonal(&[0.0, 0.0, 1.0, 2.0]);
        let h = full_hessian_objective(&q, &[1.0, -1.0, 0.5, 2.0]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((h.matrix[(i, j)] - q.a[(i, j)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn sine_hvp_matches_fd_hessian_oracle() {
        // Oracle: second differences of the loss itself, no gradients involved.
        let (spec, params, ts) = tiny_sine();
        let obj = NetworkObjective::new(&spec, &ts).unwrap();
        let theta = params.flat.clone();
        let p = theta.len();
        let f = |t: &[f64]| obj.value(t).unwrap();
        let h = 1e-4;
        let mut oracle = RealMatrix::zeros(p, p);
        for i in 0..p {
            for j in 0..p {
                let at = |di: f64, dj: f64| {
                    let mut t = theta.clone();
                    t[i] += di;
                    t[j] += dj;
                    f(&t)
                };
                oracle[(i, j)] = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
            }
        }
        let mut rng = RngStream::new(77);
        let v: Vec<f64> = (0..p).map(|_| rng.normal(0.0, 1.0).unwrap()).collect();
        let got = hvp(&spec, &params, &ts, &v).unwrap();
        let want = matvec(&oracle, &v).unwrap();
        let err = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = want.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        assert!(err / scale < 1e-4, "relative error {}", err / scale);
    }

    #[test]
    fn sine_hessian_nearly_symmetric_and_consistent_with_hvp() {
        let (spec, params, ts) = tiny_sine();
        let rep = full_hessian(&spec, &params, &ts).unwrap();
        assert!(rep.asymmetry < SMOOTH_ASYMMETRY_LIMIT);
        let mut rng = RngStream::new(5);
        let v: Vec<f64> = (0..params.len()).map(|_| rng.normal(0.0, 1.0).unwrap()).collect();
        let direct = hvp(&spec, &params, &ts, &v).unwrap();
        let via_matrix = matvec(&rep.matrix, &v).unwrap();
        let scale = direct.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        for (a, b) in direct.iter().zip(&via_matrix) {
            assert!((a - b).abs() < 1e-4 * scale);
        }
    }

    #[test]
    fn over_cap_names_the_cap() {
        let spec = NetworkSpec::new(2, vec![64, 64, 64, 64], 1, Activation::sine());
        let params = ParamVector::zeros(&spec);
        let ts = TrainingSet::new(RealMatrix::zeros(1, 2), RealMatrix::zeros(1, 1)).unwrap();
        let err = full_hessian(&spec, &params, &ts).unwrap_err();
        assert!(err.to_string().contains("2500"), "{err}");
    }
}
