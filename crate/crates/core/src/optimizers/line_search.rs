//! Strong-Wolfe line search: bracketing followed by a cubic-interpolation zoom.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::vector::{dot, norm_inf};
use crate::optimizers::Objective;

/// Steps below this abort the search.
pub const MIN_STEP: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WolfeConfig {
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    pub alpha_init: f64,
    /// Function/gradient evaluations allowed per search.
    pub max_evals: usize,
}

impl Default for WolfeConfig {
    fn default() -> Self {
        Self {
            c1: 1e-4,
            c2: 0.9,
            alpha_init: 1.0,
            max_evals: 25,
        }
    }
}

impl WolfeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::Rejected(format!(
                "wolfe constants need 0 < c1 < c2 < 1, got c1={} c2={}",
                self.c1, self.c2
            )));
        }
        if !(self.alpha_init > 0.0) || self.max_evals == 0 {
            return Err(Error::Rejected("line search needs alpha_init > 0 and max_evals >= 1".into()));
        }
        Ok(())
    }
}

/// The quantities needed to re-check both Wolfe inequalities after the fact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepCheck {
    pub alpha: f64,
    /// `f(θ)` and `∇f(θ)ᵀd` at the start.
    pub f0: f64,
    pub dg0: f64,
    /// `f(θ + αd)` and `∇f(θ + αd)ᵀd` at the accepted point.
    pub f1: f64,
    pub dg1: f64,
}

impl StepCheck {
    pub fn sufficient_decrease(&self, c1: f64) -> bool {
        self.f1 <= self.f0 + c1 * self.alpha * self.dg0
    }

    pub fn curvature(&self, c2: f64) -> bool {
        self.dg1.abs() <= c2 * self.dg0.abs()
    }

    pub fn strong_wolfe(&self, cfg: &WolfeConfig) -> bool {
        self.sufficient_decrease(cfg.c1) && self.curvature(cfg.c2)
    }
}

#[derive(Debug, Clone)]
pub struct LineSearchResult {
    pub alpha: f64,
    pub evals: usize,
    pub loss: f64,
    pub grad: Vec<f64>,
    pub check: StepCheck,
    /// Set when the evaluation budget ran out and the best point so far was
    /// returned instead of a strong-Wolfe point. Callers should not take
    /// such a step.
    pub warning: bool,
}

#[derive(Debug, Clone)]
struct Probe {
    t: f64,
    f: f64,
    dg: f64,
    g: Vec<f64>,
}

/// Minimizer of the cubic interpolating `(x1, f1, g1)` and `(x2, f2, g2)`,
/// clamped to `bounds`. Falls back to the midpoint if the cubic has none.
fn cubic_minimizer(x1: f64, f1: f64, g1: f64, x2: f64, f2: f64, g2: f64, bounds: (f64, f64)) -> f64 {
    let (lo, hi) = bounds;
    let d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2);
    let d2_sq = d1 * d1 - g1 * g2;
    if d2_sq >= 0.0 {
        let d2 = d2_sq.sqrt();
        let t = if x1 <= x2 {
            x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2))
        } else {
            x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2.0 * d2))
        };
        if t.is_finite() {
            return t.clamp(lo, hi);
        }
    }
    0.5 * (lo + hi)
}

/// Finds `α` with `f(θ+αd) ≤ f(θ) + c1·α·∇fᵀd` and `|∇f(θ+αd)ᵀd| ≤ c2·|∇fᵀd|`.
///
/// `loss` and `grad` are the objective value and gradient at `theta`.
pub fn wolfe_line_search<O: Objective + ?Sized>(
    obj: &O,
    theta: &[f64],
    loss: f64,
    grad: &[f64],
    direction: &[f64],
    alpha_init: f64,
    cfg: &WolfeConfig,
) -> Result<LineSearchResult> {
    cfg.validate()?;
    let dg0 = dot(grad, direction);
    if !(dg0 < 0.0) {
        return Err(Error::Rejected(format!("direction is not a descent direction (gᵀd = {dg0:e})")));
    }
    let f0 = loss;
    let d_norm = norm_inf(direction);
    let mut evals = 0usize;
    let mut trial = vec![0.0; theta.len()];
    let mut probe = |t: f64, evals: &mut usize| -> Result<Probe> {
        if !(t >= MIN_STEP) {
            return Err(Error::LineSearch(format!("step length {t:e} underflowed")));
        }
        for ((x, th), d) in trial.iter_mut().zip(theta).zip(direction) {
            *x = th + t * d;
        }
        *evals += 1;
        match obj.value_and_gradient(&trial) {
            Ok((f, g)) => {
                let dg = dot(&g, direction);
                Ok(Probe { t, f, dg, g })
            }
            // An overflowing trial point just means the step is too long.
            Err(Error::NonFinite(_)) => Ok(Probe {
                t,
                f: f64::INFINITY,
                dg: f64::NAN,
                g: Vec::new(),
            }),
            Err(e) => Err(e),
        }
    };
    let armijo = |p: &Probe| p.f <= f0 + cfg.c1 * p.t * dg0;
    let curvature_ok = |p: &Probe| p.dg.abs() <= -cfg.c2 * dg0;
    let finish = |p: Probe, evals: usize, warning: bool| LineSearchResult {
        alpha: p.t,
        evals,
        loss: p.f,
        check: StepCheck {
            alpha: p.t,
            f0,
            dg0,
            f1: p.f,
            dg1: p.dg,
        },
        grad: p.g,
        warning,
    };

    let mut prev = Probe {
        t: 0.0,
        f: f0,
        dg: dg0,
        g: grad.to_vec(),
    };
    let mut t = alpha_init;
    let (mut lo, mut hi);
    let mut first = true;
    loop {
        let cur = probe(t, &mut evals)?;
        if !armijo(&cur) || (!first && cur.f >= prev.f) {
            lo = prev;
            hi = cur;
            break;
        }
        if curvature_ok(&cur) {
            return Ok(finish(cur, evals, false));
        }
        if cur.dg >= 0.0 {
            lo = cur;
            hi = prev;
            break;
        }
        if evals >= cfg.max_evals {
            return Ok(finish(cur, evals, true));
        }
        let bounds = (cur.t + 0.01 * (cur.t - prev.t), 10.0 * cur.t);
        t = cubic_minimizer(prev.t, prev.f, prev.dg, cur.t, cur.f, cur.dg, bounds);
        prev = cur;
        first = false;
    }

    // Zoom: `lo` satisfies sufficient decrease and has the lowest value seen;
    // the interval between `lo` and `hi` contains a strong-Wolfe point.
    let mut insufficient_progress = false;
    while evals < cfg.max_evals {
        let (a, b) = if lo.t <= hi.t { (lo.t, hi.t) } else { (hi.t, lo.t) };
        if (b - a) * d_norm < f64::EPSILON * (1.0 + a * d_norm) {
            break;
        }
        let mut t = if hi.f.is_finite() && hi.dg.is_finite() {
            cubic_minimizer(lo.t, lo.f, lo.dg, hi.t, hi.f, hi.dg, (a, b))
        } else {
            0.5 * (a + b)
        };
        let eps = 0.1 * (b - a);
        if (b - t).min(t - a) < eps {
            if insufficient_progress || t >= b || t <= a {
                t = if (t - b).abs() < (t - a).abs() { b - eps } else { a + eps };
                insufficient_progress = false;
            } else {
                insufficient_progress = true;
            }
        } else {
            insufficient_progress = false;
        }
        let cur = probe(t, &mut evals)?;
        if !armijo(&cur) || cur.f >= lo.f {
            hi = cur;
        } else {
            if curvature_ok(&cur) {
                return Ok(finish(cur, evals, false));
            }
            if cur.dg * (hi.t - lo.t) >= 0.0 {
                hi = std::mem::replace(&mut lo, cur);
            } else {
                lo = cur;
            }
        }
    }
    if lo.t > 0.0 {
        Ok(finish(lo, evals, true))
    } else {
        Err(Error::LineSearch(format!(
            "no decrease found in {evals} evaluations (interval [{:e}, {:e}])",
            lo.t.min(hi.t),
            lo.t.max(hi.t)
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizers::testfns::{Quadratic, Rosenbrock};

    #[test]
    fn exact_minimizer_of_1d_quadratic() {
        // f(x) = ½(x − 1)² from x = 0 along +1.
        let q = Quadratic::new(crate::numerics::RealMatrix::identity(1), vec![1.0]).unwrap();
        let (f0, g0) = q.value_and_gradient(&[0.0]).unwrap();
        let cfg = WolfeConfig::default();
        let r = wolfe_line_search(&q, &[0.0], f0, &g0, &[1.0], 1.0, &cfg).unwrap();
        assert_eq!(r.alpha, 1.0);
        assert!(r.evals <= 3);
        assert!(r.check.strong_wolfe(&cfg));
    }

    #[test]
    fn rosenbrock_steepest_descent_step_is_strong_wolfe() {
        let x = [-1.2, 1.0];
        let (f0, g0) = Rosenbrock.value_and_gradient(&x).unwrap();
        let d: Vec<f64> = g0.iter().map(|v| -v).collect();
        let cfg = WolfeConfig::default();
        for alpha0 in [1.0, 1e-3, 1e-6] {
            let r = wolfe_line_search(&Rosenbrock, &x, f0, &g0, &d, alpha0, &cfg).unwrap();
            assert!(!r.warning);
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + r.alpha * b).collect();
            let (f1, g1) = Rosenbrock.value_and_gradient(&xn).unwrap();
            let dg0 = dot(&g0, &d);
            assert!(f1 <= f0 + cfg.c1 * r.alpha * dg0);
            assert!(dot(&g1, &d).abs() <= cfg.c2 * dg0.abs());
        }
    }

    #[test]
    fn ascent_direction_rejected() {
        let (f0, g0) = Rosenbrock.value_and_gradient(&[0.0, 0.0]).unwrap();
        let r = wolfe_line_search(&Rosenbrock, &[0.0, 0.0], f0, &g0, &g0, 1.0, &WolfeConfig::default());
        assert!(matches!(r, Err(Error::Rejected(_))));
    }

    #[test]
    fn invalid_constants_rejected() {
        let cfg = WolfeConfig {
            c1: 0.5,
            c2: 0.4,
            ..WolfeConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn cubic_minimizer_finds_quadratic_vertex() {
        // f = (x − 0.3)², sampled at 0 and 1.
        let t = cubic_minimizer(0.0, 0.09, -0.6, 1.0, 0.49, 1.4, (0.0, 1.0));
        assert!((t - 0.3).abs() < 1e-12);
    }
}
