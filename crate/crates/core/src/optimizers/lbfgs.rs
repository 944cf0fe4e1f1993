//! Limited-memory BFGS: a ring of curvature pairs and the two-loop recursion.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::numerics::vector::{axpy, dot};
use crate::optimizers::bfgs::CURVATURE_EPS;

pub const DEFAULT_HISTORY: usize = 10;

/// Initial inverse-Hessian guess `H₀ = γI` used inside the two-loop recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialScaling {
    /// `γ = sᵀy / yᵀy` from the newest pair.
    #[default]
    Newest,
    /// `γ = 1`.
    Identity,
}

#[derive(Debug, Clone)]
struct CurvaturePair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

#[derive(Debug, Clone)]
pub struct LbfgsState {
    history: usize,
    curvature_eps: f64,
    scaling: InitialScaling,
    pairs: VecDeque<CurvaturePair>,
    skipped: usize,
}

impl LbfgsState {
    pub fn new(history: usize) -> Self {
        Self {
            history: history.max(1),
            curvature_eps: CURVATURE_EPS,
            scaling: InitialScaling::Newest,
            pairs: VecDeque::with_capacity(history.max(1)),
            skipped: 0,
        }
    }

    pub fn with_scaling(mut self, scaling: InitialScaling) -> Self {
        self.scaling = scaling;
        self
    }

    pub fn history(&self) -> usize {
        self.history
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Number of pairs rejected by the curvature test so far.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn clear(&mut self) {
        self.pairs.clear();
    }

    /// Stores `(s, y)` if `yᵀs > curvature_eps`, evicting the oldest pair when
    /// full. Returns whether the pair was stored.
    pub fn push(&mut self, s: Vec<f64>, y: Vec<f64>) -> bool {
        let ys = dot(&y, &s);
        if !(ys > self.curvature_eps) {
            self.skipped += 1;
            return false;
        }
        if self.pairs.len() == self.history {
            self.pairs.pop_front();
        }
        self.pairs.push_back(CurvaturePair { s, y, rho: 1.0 / ys });
        true
    }

    pub fn gamma(&self) -> f64 {
        match (self.scaling, self.pairs.back()) {
            (InitialScaling::Newest, Some(p)) => 1.0 / (p.rho * dot(&p.y, &p.y)),
            _ => 1.0,
        }
    }

    /// `H·v` for the implicit inverse-Hessian approximation.
    pub fn apply_inverse_hessian(&self, v: &[f64]) -> Vec<f64> {
        let mut q = v.to_vec();
        let mut alphas = vec![0.0; self.pairs.len()];
        for (i, p) in self.pairs.iter().enumerate().rev() {
            let a = p.rho * dot(&p.s, &q);
            alphas[i] = a;
            axpy(-a, &p.y, &mut q);
        }
        let gamma = self.gamma();
        for v in q.iter_mut() {
            *v *= gamma;
        }
        for (p, &a) in self.pairs.iter().zip(&alphas) {
            let b = p.rho * dot(&p.y, &q);
            axpy(a - b, &p.s, &mut q);
        }
        q
    }

    /// Search direction `−H·grad`; plain steepest descent with no history.
    pub fn direction(&self, grad: &[f64]) -> Vec<f64> {
        let mut d = self.apply_inverse_hessian(grad);
        for v in d.iter_mut() {
            *v = -*v;
        }
        d
    }

    /// Relative secant residual `‖H y − s‖∞ / ‖s‖∞` of the newest pair.
    pub fn newest_secant_residual(&self) -> Option<f64> {
        let p = self.pairs.back()?;
        let hy = self.apply_inverse_hessian(&p.y);
        let scale = p.s.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let worst = hy.iter().zip(&p.s).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        Some(worst / scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{matvec, RealMatrix, RngStream};
    use crate::optimizers::bfgs::{bfgs_update, BfgsUpdate};

    fn random_pairs(rng: &mut RngStream, n: usize, count: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
        // y = A s for a fixed SPD A keeps every pair admissible.
        let mut a = RealMatrix::identity(n);
        for i in 0..n {
            a[(i, i)] = rng.uniform(0.5, 5.0).unwrap();
        }
        (0..count)
            .map(|_| {
                let s: Vec<f64> = (0..n).map(|_| rng.normal(0.0, 1.0).unwrap()).collect();
                let mut y = matvec(&a, &s).unwrap();
                for v in y.iter_mut() {
                    *v += 0.1 * rng.normal(0.0, 1.0).unwrap();
                }
                (s, y)
            })
            .collect()
    }

    #[test]
    fn empty_history_is_steepest_descent() {
        let state = LbfgsState::new(5);
        assert_eq!(state.direction(&[1.0, -2.0]), vec![-1.0, 2.0]);
    }

    #[test]
    fn two_loop_matches_dense_bfgs_from_identity() {
        let mut rng = RngStream::new(8);
        let n = 7;
        let pairs = random_pairs(&mut rng, n, 10);
        let mut state = LbfgsState::new(10).with_scaling(InitialScaling::Identity);
        let mut m = RealMatrix::identity(n);
        let g: Vec<f64> = (0..n).map(|_| rng.normal(0.0, 1.0).unwrap()).collect();
        for (s, y) in pairs {
            assert!(state.push(s.clone(), y.clone()));
            m = match bfgs_update(&m, &s, &y, CURVATURE_EPS) {
                BfgsUpdate::Applied(next) => next,
                other => panic!("{other:?}"),
            };
            let dense: Vec<f64> = matvec(&m, &g).unwrap().iter().map(|v| -v).collect();
            let two_loop = state.direction(&g);
            let scale = dense.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            for (a, b) in two_loop.iter().zip(&dense) {
                assert!((a - b).abs() <= 1e-10 * scale);
            }
            assert!(dot(&two_loop, &g) < 0.0);
            assert!(state.newest_secant_residual().unwrap() < 1e-12);
        }
    }

    #[test]
    fn ring_evicts_oldest() {
        let mut state = LbfgsState::new(2);
        for k in 1..=3 {
            assert!(state.push(vec![k as f64], vec![1.0]));
        }
        assert_eq!(state.len(), 2);
        assert_eq!(state.pairs.front().unwrap().s, vec![2.0]);
    }

    #[test]
    fn inadmissible_pairs_are_counted_not_stored() {
        let mut state = LbfgsState::new(3);
        assert!(!state.push(vec![1.0, 0.0], vec![-1.0, 0.0]));
        assert!(!state.push(vec![1e-6, 0.0], vec![1e-6, 0.0]));
        assert_eq!(state.len(), 0);
        assert_eq!(state.skipped(), 2);
    }

    #[test]
    fn gamma_uses_newest_pair() {
        let mut state = LbfgsState::new(3);
        assert_eq!(state.gamma(), 1.0);
        state.push(vec![2.0, 0.0], vec![1.0, 0.0]);
        assert_eq!(state.gamma(), 2.0);
    }
}
