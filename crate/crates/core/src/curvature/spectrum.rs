//! Eigen-spectrum census of loss Hessians, optionally tracked along a training run.

use serde::{Deserialize, Serialize};

use crate::curvature::hessian::{full_hessian, HessianReport};
use crate::error::{Error, Result};
use crate::network::{init_params, NetworkSpec, ParamVector, TrainingSet};
use crate::numerics::{symmetric_eigenvalues, RealMatrix};
use crate::optimizers::{IterationRecord, NetworkObjective, OptimizerConfig, OptimizerStats, Termination, Trainer};

/// Eigenvalues with magnitude below this count as zero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-8;
pub const DEFAULT_WINDOW: (f64, f64) = (-0.01, 0.01);
pub const DEFAULT_BINS: usize = 100;

/// Convergence tolerance handed to the eigensolver, relative to `max|H|`.
pub const EIGEN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumConfig {
    pub zero_tol: f64,
    pub window: (f64, f64),
    pub bins: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            zero_tol: DEFAULT_ZERO_TOL,
            window: DEFAULT_WINDOW,
            bins: DEFAULT_BINS,
        }
    }
}

impl SpectrumConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.window;
        if !(self.zero_tol >= 0.0) || !(lo < hi) || !lo.is_finite() || !hi.is_finite() || self.bins == 0 {
            return Err(Error::Rejected(format!("invalid spectrum config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` ascending edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Counts values in `[lo, hi]`; the last bin is closed on the right.
    pub fn new(values: &[f64], window: (f64, f64), bins: usize) -> Self {
        let (lo, hi) = window;
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|k| if k == bins { hi } else { lo + k as f64 * width }).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            if v < lo || v > hi || v.is_nan() {
                continue;
            }
            let k = (((v - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        Self { edges, counts }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub zero_tol: f64,
    pub zero_fraction: f64,
    /// Smallest `|λ|` not counted as zero; `None` if all are zero.
    pub min_abs_nonzero: Option<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub histogram: Histogram,
    /// Training iteration at which the Hessian was taken.
    pub theta_snapshot_iter: usize,
    /// Relative asymmetry of the assembled Hessian before symmetrizing.
    pub asymmetry: f64,
}

impl SpectrumReport {
    /// Census of the eigenvalues of a symmetric matrix.
    pub fn from_matrix(h: &RealMatrix, cfg: &SpectrumConfig, iter: usize, asymmetry: f64) -> Result<Self> {
        cfg.validate()?;
        let eigenvalues = symmetric_eigenvalues(h, EIGEN_TOL)?;
        Self::from_eigenvalues(eigenvalues, cfg, iter, asymmetry)
    }

    pub fn from_eigenvalues(eigenvalues: Vec<f64>, cfg: &SpectrumConfig, iter: usize, asymmetry: f64) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::Rejected("spectrum of an empty matrix".into()));
        }
        let zeros = eigenvalues.iter().filter(|l| l.abs() < cfg.zero_tol).count();
        let min_abs_nonzero = eigenvalues
            .iter()
            .map(|l| l.abs())
            .filter(|a| *a >= cfg.zero_tol)
            .min_by(f64::total_cmp);
        Ok(Self {
            zero_tol: cfg.zero_tol,
            zero_fraction: zeros as f64 / eigenvalues.len() as f64,
            min_abs_nonzero,
            lambda_min: eigenvalues[0],
            lambda_max: eigenvalues[eigenvalues.len() - 1],
            histogram: Histogram::new(&eigenvalues, cfg.window, cfg.bins),
            theta_snapshot_iter: iter,
            asymmetry,
            eigenvalues,
        })
    }

    /// One eigenvalue per line, in `{:e}` round-trip form.
    pub fn eigenvalues_text(&self) -> String {
        let mut s = String::with_capacity(self.eigenvalues.len() * 24);
        for l in &self.eigenvalues {
            s.push_str(&format!("{l:e}\n"));
        }
        s
    }

    /// `lo,hi,count` rows with a header.
    pub fn histogram_csv(&self) -> String {
        let mut s = String::from("lo,hi,count\n");
        for (k, c) in self.histogram.counts.iter().enumerate() {
            s.push_str(&format!("{:e},{:e},{}\n", self.histogram.edges[k], self.histogram.edges[k + 1], c));
        }
        s
    }
}

pub fn spectrum(
    spec: &NetworkSpec,
    params: &ParamVector,
    ts: &TrainingSet,
    cfg: &SpectrumConfig,
    iter: usize,
) -> Result<SpectrumReport> {
    cfg.validate()?;
    let HessianReport { matrix, asymmetry } = full_hessian(spec, params, ts)?;
    SpectrumReport::from_matrix(&matrix, cfg, iter, asymmetry)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTrace {
    pub reports: Vec<SpectrumReport>,
    pub trace: Vec<IterationRecord>,
    /// Set if training stopped before `iters`; later snapshots reuse the final parameters.
    pub early_stop: Option<Termination>,
    pub final_params: ParamVector,
    pub stats: OptimizerStats,
}

/// Trains from the spec's initialization, taking a spectrum at iteration 0 and
/// after every `snapshot_every` iterations (post-step parameters).
pub fn spectrum_trace(
    spec: &NetworkSpec,
    ts: &TrainingSet,
    optimizer: &OptimizerConfig,
    iters: usize,
    snapshot_every: usize,
    cfg: &SpectrumConfig,
) -> Result<SpectrumTrace> {
    if snapshot_every == 0 {
        return Err(Error::Rejected("snapshot_every must be at least 1".into()));
    }
    cfg.validate()?;
    let obj = NetworkObjective::new(spec, ts)?;
    let mut trainer = Trainer::new(&obj, init_params(spec)?.flat, *optimizer)?;
    let snapshot = |theta: &[f64], iter: usize| -> Result<SpectrumReport> {
        spectrum(spec, &ParamVector::from_flat(spec, theta.to_vec())?, ts, cfg, iter)
    };
    let mut reports = vec![snapshot(trainer.theta(), 0)?];
    let mut trace = Vec::with_capacity(iters);
    let mut early_stop = None;
    for it in 1..=iters {
        if early_stop.is_none() {
            match trainer.step() {
                Ok(rec) => trace.push(rec),
                Err(Error::LineSearch(msg)) => early_stop = Some(Termination::LineSearchFailure(msg)),
                Err(Error::NonFinite(msg)) => early_stop = Some(Termination::NonFinite(msg)),
                Err(e) => return Err(e),
            }
        }
        if it % snapshot_every == 0 {
            reports.push(snapshot(trainer.theta(), trainer.iterations())?);
        }
    }
    Ok(SpectrumTrace {
        reports,
        trace,
        early_stop,
        stats: trainer.stats().clone(),
        final_params: ParamVector::from_flat(spec, trainer.into_theta())?,
    })
}
