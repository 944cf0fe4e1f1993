//! Resumable training loop shared by every optimizer, with budgets and traces.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::vector::{all_finite, dot, norm2};
use crate::numerics::RealMatrix;
use crate::optimizers::bfgs::{bfgs_update, secant_residual, BfgsUpdate, CURVATURE_EPS};
use crate::optimizers::first_order::{gd_step, AdamConfig, AdamState};
use crate::optimizers::lbfgs::{InitialScaling, LbfgsState, DEFAULT_HISTORY};
use crate::optimizers::line_search::{wolfe_line_search, StepCheck, WolfeConfig};
use crate::optimizers::newton::newton_step;
use crate::optimizers::Objective;

/// Learning rate used by gradient descent when none is given.
pub const DEFAULT_GD_LR: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Lbfgs,
    Bfgs,
    Newton,
    Adam,
    Gd,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 5] = [Self::Lbfgs, Self::Bfgs, Self::Newton, Self::Adam, Self::Gd];

    pub fn name(self) -> &'static str {
        match self {
            Self::Lbfgs => "lbfgs",
            Self::Bfgs => "bfgs",
            Self::Newton => "newton",
            Self::Adam => "adam",
            Self::Gd => "gd",
        }
    }

    pub fn uses_line_search(self) -> bool {
        matches!(self, Self::Lbfgs | Self::Bfgs)
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Rejected(format!("unknown optimizer '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    /// L-BFGS history length.
    pub history: usize,
    pub lbfgs_scaling: InitialScaling,
    /// Rescale dense BFGS's identity start by `sᵀy/yᵀy` before its first update.
    pub bfgs_scale_initial: bool,
    pub wolfe: WolfeConfig,
    pub adam: AdamConfig,
    pub gd_lr: f64,
}

impl OptimizerConfig {
    pub fn new(kind: OptimizerKind) -> Self {
        Self {
            kind,
            history: DEFAULT_HISTORY,
            lbfgs_scaling: InitialScaling::Newest,
            bfgs_scale_initial: true,
            wolfe: WolfeConfig::default(),
            adam: AdamConfig::default(),
            gd_lr: DEFAULT_GD_LR,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.wolfe.validate()?;
        self.adam.validate()?;
        if self.history == 0 {
            return Err(Error::Rejected("history must be at least 1".into()));
        }
        if !(self.gd_lr > 0.0 && self.gd_lr.is_finite()) {
            return Err(Error::Rejected(format!("gd learning rate {} must be positive", self.gd_lr)));
        }
        Ok(())
    }
}

/// Converts a loss of the form `(1/N)Σ½‖r‖²` into PSNR in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsnrScale {
    pub peak: f64,
    /// Output channels per sample.
    pub channels: usize,
}

impl PsnrScale {
    pub fn psnr(&self, loss: f64) -> f64 {
        let mse = 2.0 * loss / self.channels as f64;
        if mse == 0.0 {
            f64::INFINITY
        } else {
            10.0 * (self.peak * self.peak / mse).log10()
        }
    }
}

/// Stopping rules; the run ends on the first clause satisfied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub max_iters: usize,
    pub max_seconds: Option<f64>,
    pub target_loss: Option<f64>,
    pub target_grad_norm: Option<f64>,
    /// Only checked when the trainer has a [`PsnrScale`].
    pub target_psnr: Option<f64>,
}

impl Budget {
    pub fn iterations(max_iters: usize) -> Self {
        Self {
            max_iters,
            max_seconds: None,
            target_loss: None,
            target_grad_norm: None,
            target_psnr: None,
        }
    }

    pub fn with_target_loss(mut self, v: f64) -> Self {
        self.target_loss = Some(v);
        self
    }

    pub fn with_target_grad_norm(mut self, v: f64) -> Self {
        self.target_grad_norm = Some(v);
        self
    }

    pub fn with_target_psnr(mut self, v: f64) -> Self {
        self.target_psnr = Some(v);
        self
    }

    pub fn with_max_seconds(mut self, v: f64) -> Self {
        self.max_seconds = Some(v);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub loss: f64,
    pub grad_norm: f64,
    pub step_len: f64,
    pub elapsed_ms: f64,
    pub psnr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", content = "detail", rename_all = "snake_case")]
pub enum Termination {
    MaxIters,
    MaxSeconds,
    TargetLoss,
    TargetGradNorm,
    TargetPsnr,
    /// The gradient is exactly zero.
    Stationary,
    LineSearchFailure(String),
    NonFinite(String),
}

impl Termination {
    pub fn name(&self) -> &'static str {
        match self {
            Self::MaxIters => "max_iters",
            Self::MaxSeconds => "max_seconds",
            Self::TargetLoss => "target_loss",
            Self::TargetGradNorm => "target_grad_norm",
            Self::TargetPsnr => "target_psnr",
            Self::Stationary => "stationary",
            Self::LineSearchFailure(_) => "line_search_failure",
            Self::NonFinite(_) => "non_finite",
        }
    }

    pub fn is_abort(&self) -> bool {
        matches!(self, Self::NonFinite(_))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OptimizerStats {
    /// Objective evaluations, including the initial one.
    pub evaluations: usize,
    /// Line searches rejected for running out of evaluations.
    pub line_search_warnings: usize,
    pub skipped_updates: usize,
    pub history_resets: usize,
    pub newton_shifts: usize,
    /// Largest secant residual over accepted quasi-Newton updates.
    pub max_secant_residual: f64,
}

/// Per-step line-search and secant diagnostics, kept when
/// [`Trainer::record_diagnostics`] is enabled.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub wolfe: Vec<StepCheck>,
    /// Iterations whose line search ran out of evaluations without a
    /// strong-Wolfe point; those steps were rejected, not taken.
    pub wolfe_warnings: Vec<usize>,
    pub secant_residuals: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Method {
    Lbfgs(LbfgsState),
    Bfgs { m: RealMatrix, updates: usize },
    Newton,
    Adam(AdamState),
    Gd,
}

/// An optimizer bound to an objective, advanced one iteration at a time.
pub struct Trainer<'o, O: Objective + ?Sized> {
    obj: &'o O,
    cfg: OptimizerConfig,
    method: Method,
    theta: Vec<f64>,
    loss: f64,
    grad: Vec<f64>,
    iter: usize,
    elapsed_ms: f64,
    psnr_scale: Option<PsnrScale>,
    stats: OptimizerStats,
    diagnostics: Option<StepDiagnostics>,
}

impl<'o, O: Objective + ?Sized> Trainer<'o, O> {
    pub fn new(obj: &'o O, theta: Vec<f64>, cfg: OptimizerConfig) -> Result<Self> {
        cfg.validate()?;
        crate::error::check_dims("initial parameters", obj.dim(), theta.len())?;
        let (loss, grad) = obj.value_and_gradient(&theta)?;
        if !loss.is_finite() || !all_finite(&grad) {
            return Err(Error::NonFinite("loss or gradient at the initial point".into()));
        }
        let n = theta.len();
        let method = match cfg.kind {
            OptimizerKind::Lbfgs => Method::Lbfgs(LbfgsState::new(cfg.history).with_scaling(cfg.lbfgs_scaling)),
            OptimizerKind::Bfgs => {
                if n > crate::optimizers::BFGS_MAX_PARAMS {
                    return Err(Error::OverCap {
                        what: "dense bfgs parameter count",
                        size: n,
                        cap: crate::optimizers::BFGS_MAX_PARAMS,
                    });
                }
                Method::Bfgs {
                    m: RealMatrix::identity(n),
                    updates: 0,
                }
            }
            OptimizerKind::Newton => Method::Newton,
            OptimizerKind::Adam => Method::Adam(AdamState::new(n, cfg.adam)?),
            OptimizerKind::Gd => Method::Gd,
        };
        Ok(Self {
            obj,
            cfg,
            method,
            theta,
            loss,
            grad,
            iter: 0,
            elapsed_ms: 0.0,
            psnr_scale: None,
            stats: OptimizerStats {
                evaluations: 1,
                ..OptimizerStats::default()
            },
            diagnostics: None,
        })
    }

    pub fn with_psnr(mut self, scale: PsnrScale) -> Self {
        self.psnr_scale = Some(scale);
        self
    }

    /// Keeps every Wolfe check and secant residual for later inspection.
    pub fn record_diagnostics(mut self) -> Self {
        self.diagnostics = Some(StepDiagnostics::default());
        self
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.cfg
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn into_theta(self) -> Vec<f64> {
        self.theta
    }

    pub fn loss(&self) -> f64 {
        self.loss
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    pub fn grad_norm(&self) -> f64 {
        norm2(&self.grad)
    }

    pub fn psnr(&self) -> Option<f64> {
        self.psnr_scale.map(|s| s.psnr(self.loss))
    }

    pub fn iterations(&self) -> usize {
        self.iter
    }

    pub fn elapsed_ms(&self) -> f64 {
        self.elapsed_ms
    }

    pub fn stats(&self) -> &OptimizerStats {
        &self.stats
    }

    pub fn diagnostics(&self) -> Option<&StepDiagnostics> {
        self.diagnostics.as_ref()
    }

    /// Initial trial step for line searches with no curvature information yet.
    fn cold_alpha(&self) -> f64 {
        self.cfg.wolfe.alpha_init.min(1.0 / norm2(&self.grad))
    }

    /// One iteration. On error the trainer keeps its last good state.
    pub fn step(&mut self) -> Result<IterationRecord> {
        let start = Instant::now();
        let (theta, loss, grad) = match &mut self.method {
            Method::Lbfgs(_) | Method::Bfgs { .. } => self.quasi_newton_step()?,
            Method::Newton => {
                let step = newton_step(self.obj, &self.theta)?;
                // The Hessian needs its own gradient evaluations.
                self.stats.evaluations += 1;
                if step.shift > 0.0 {
                    self.stats.newton_shifts += 1;
                }
                let (f, g) = self.evaluate(&step.theta)?;
                (step.theta, f, g)
            }
            Method::Adam(state) => {
                let mut theta = self.theta.clone();
                state.step(&mut theta, &self.grad);
                let (f, g) = self.evaluate(&theta)?;
                (theta, f, g)
            }
            Method::Gd => {
                let mut theta = self.theta.clone();
                gd_step(&mut theta, &self.grad, self.cfg.gd_lr);
                let (f, g) = self.evaluate(&theta)?;
                (theta, f, g)
            }
        };
        let step_len = self
            .theta
            .iter()
            .zip(&theta)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt();
        self.theta = theta;
        self.loss = loss;
        self.grad = grad;
        self.iter += 1;
        self.elapsed_ms += start.elapsed().as_secs_f64() * 1e3;
        Ok(IterationRecord {
            iter: self.iter,
            loss,
            grad_norm: norm2(&self.grad),
            step_len,
            elapsed_ms: self.elapsed_ms,
            psnr: self.psnr(),
        })
    }

    fn evaluate(&mut self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.stats.evaluations += 1;
        let (f, g) = self.obj.value_and_gradient(theta)?;
        if !f.is_finite() || !all_finite(&g) {
            return Err(Error::NonFinite(format!("loss {f} after iteration {}", self.iter + 1)));
        }
        Ok((f, g))
    }

    fn reset_curvature(&mut self) {
        self.stats.history_resets += 1;
        match &mut self.method {
            Method::Lbfgs(state) => state.clear(),
            Method::Bfgs { m, updates } => {
                *m = RealMatrix::identity(self.theta.len());
                *updates = 0;
            }
            _ => {}
        }
    }

    fn quasi_newton_step(&mut self) -> Result<(Vec<f64>, f64, Vec<f64>)> {
        let (mut direction, cold) = match &self.method {
            Method::Lbfgs(state) => (state.direction(&self.grad), state.is_empty()),
            Method::Bfgs { m, updates } => {
                let mg = crate::numerics::matvec(m, &self.grad)?;
                (mg.iter().map(|v| -v).collect::<Vec<_>>(), *updates == 0)
            }
            _ => unreachable!("quasi-newton step on a first-order method"),
        };
        let mut alpha0 = if cold { self.cold_alpha() } else { self.cfg.wolfe.alpha_init };
        let mut restarted = false;
        if !(dot(&direction, &self.grad) < 0.0) {
            // Rounding broke positive definiteness; restart from steepest descent.
            self.reset_curvature();
            direction = self.grad.iter().map(|v| -v).collect();
            alpha0 = self.cold_alpha();
            restarted = true;
        }
        let ls = loop {
            let outcome =
                wolfe_line_search(self.obj, &self.theta, self.loss, &self.grad, &direction, alpha0, &self.cfg.wolfe);
            let msg = match outcome {
                Ok(ls) => {
                    self.stats.evaluations += ls.evals;
                    if !ls.warning {
                        break ls;
                    }
                    self.stats.line_search_warnings += 1;
                    if let Some(d) = self.diagnostics.as_mut() {
                        d.wolfe_warnings.push(self.iter + 1);
                    }
                    format!("no strong-Wolfe point within {} evaluations", ls.evals)
                }
                Err(Error::LineSearch(msg)) => msg,
                Err(e) => return Err(e),
            };
            // A failed search along a curvature-scaled direction is retried
            // once along steepest descent before giving up.
            if cold || restarted {
                return Err(Error::LineSearch(msg));
            }
            self.reset_curvature();
            direction = self.grad.iter().map(|v| -v).collect();
            alpha0 = self.cold_alpha();
            restarted = true;
        };
        if !ls.loss.is_finite() || !all_finite(&ls.grad) {
            return Err(Error::NonFinite(format!("loss {} after iteration {}", ls.loss, self.iter + 1)));
        }
        if let Some(d) = self.diagnostics.as_mut() {
            d.wolfe.push(ls.check);
        }
        let s: Vec<f64> = direction.iter().map(|d| ls.alpha * d).collect();
        let theta: Vec<f64> = self.theta.iter().zip(&s).map(|(t, si)| t + si).collect();
        let y: Vec<f64> = ls.grad.iter().zip(&self.grad).map(|(a, b)| a - b).collect();
        let residual = match &mut self.method {
            Method::Lbfgs(state) => {
                if state.push(s, y) {
                    state.newest_secant_residual()
                } else {
                    self.stats.skipped_updates += 1;
                    None
                }
            }
            Method::Bfgs { m, updates } => {
                if *updates == 0 && self.cfg.bfgs_scale_initial {
                    let ys = dot(&y, &s);
                    if ys > CURVATURE_EPS {
                        let gamma = ys / dot(&y, &y);
                        for v in m.as_mut_slice() {
                            *v *= gamma;
                        }
                    }
                }
                match bfgs_update(m, &s, &y, CURVATURE_EPS) {
                    BfgsUpdate::Applied(next) => {
                        *m = next;
                        *updates += 1;
                        Some(secant_residual(m, &s, &y))
                    }
                    BfgsUpdate::Skipped { .. } => {
                        self.stats.skipped_updates += 1;
                        None
                    }
                }
            }
            _ => None,
        };
        if let Some(r) = residual {
            self.stats.max_secant_residual = self.stats.max_secant_residual.max(r);
            if let Some(d) = self.diagnostics.as_mut() {
                d.secant_residuals.push(r);
            }
        }
        Ok((theta, ls.loss, ls.grad))
    }

    /// Which budget clause, if any, the current state satisfies.
    pub fn check_budget(&self, budget: &Budget) -> Option<Termination> {
        if self.grad.iter().all(|g| *g == 0.0) {
            return Some(Termination::Stationary);
        }
        if budget.target_loss.is_some_and(|t| self.loss <= t) {
            return Some(Termination::TargetLoss);
        }
        if budget.target_grad_norm.is_some_and(|t| self.grad_norm() <= t) {
            return Some(Termination::TargetGradNorm);
        }
        if let (Some(t), Some(p)) = (budget.target_psnr, self.psnr()) {
            if p >= t {
                return Some(Termination::TargetPsnr);
            }
        }
        if self.iter >= budget.max_iters {
            return Some(Termination::MaxIters);
        }
        if budget.max_seconds.is_some_and(|t| self.elapsed_ms >= t * 1e3) {
            return Some(Termination::MaxSeconds);
        }
        None
    }

    /// Steps until a budget clause holds or the run fails.
    ///
    /// Failures that leave a usable parameter vector (line-search breakdown,
    /// non-finite loss) end the run normally and are reported in the outcome.
    pub fn run(&mut self, budget: &Budget) -> Result<RunReport> {
        let mut trace = Vec::new();
        let termination = loop {
            if let Some(t) = self.check_budget(budget) {
                break t;
            }
            match self.step() {
                Ok(rec) => trace.push(rec),
                Err(Error::LineSearch(msg)) => break Termination::LineSearchFailure(msg),
                Err(Error::NonFinite(msg)) => break Termination::NonFinite(msg),
                Err(e) => return Err(e),
            }
        };
        Ok(RunReport { trace, termination })
    }
}

/// The trace and stopping reason of one [`Trainer::run`] call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub trace: Vec<IterationRecord>,
    pub termination: Termination,
}

#[derive(Debug, Clone)]
pub struct OptimizerOutcome {
    pub theta: Vec<f64>,
    pub initial_loss: f64,
    pub trace: Vec<IterationRecord>,
    pub termination: Termination,
    pub stats: OptimizerStats,
    pub diagnostics: StepDiagnostics,
}

impl OptimizerOutcome {
    pub fn final_loss(&self) -> f64 {
        self.trace.last().map_or(self.initial_loss, |r| r.loss)
    }
}

/// Runs `cfg.kind` on `obj` from `theta0` until `budget` stops it.
pub fn run_optimizer<O: Objective + ?Sized>(
    obj: &O,
    theta0: Vec<f64>,
    cfg: &OptimizerConfig,
    budget: &Budget,
) -> Result<OptimizerOutcome> {
    let mut trainer = Trainer::new(obj, theta0, *cfg)?.record_diagnostics();
    let initial_loss = trainer.loss();
    let report = trainer.run(budget)?;
    let stats = trainer.stats().clone();
    let diagnostics = trainer.diagnostics().cloned().unwrap_or_default();
    Ok(OptimizerOutcome {
        theta: trainer.into_theta(),
        initial_loss,
        trace: report.trace,
        termination: report.termination,
        stats,
        diagnostics,
    })
}
