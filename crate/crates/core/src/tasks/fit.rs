//! Fitting a single network to a training set.

use crate::error::Result;
use crate::network::{init_params, NetworkSpec, ParamVector, TrainingSet};
use crate::numerics::RealMatrix;
use crate::numerics::RngStream;
use crate::optimizers::{
    Budget, IterationRecord, NetworkObjective, OptimizerConfig, OptimizerStats, PsnrScale, StepDiagnostics,
    Termination, Trainer,
};

/// Salt separating the subsampling stream from the initialization stream.
pub const SAMPLE_SALT: u64 = 0x5EED_5A4D_504C_4553;

/// Keeps all rows if there are at most `max_samples`, otherwise a seeded
/// uniform subset without replacement, in ascending row order.
pub fn subsample(ts: &TrainingSet, max_samples: usize, seed: u64) -> Result<TrainingSet> {
    if ts.len() <= max_samples {
        return Ok(ts.clone());
    }
    let mut rng = RngStream::new(seed ^ SAMPLE_SALT);
    let rows = rng.sample_without_replacement(ts.len(), max_samples);
    let pick = |m: &RealMatrix| -> Result<RealMatrix> {
        let mut data = Vec::with_capacity(rows.len() * m.cols());
        for &r in &rows {
            data.extend_from_slice(m.row(r));
        }
        RealMatrix::from_vec(rows.len(), m.cols(), data)
    };
    TrainingSet::new(pick(&ts.x)?, pick(&ts.y)?)
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: ParamVector,
    pub initial_loss: f64,
    pub initial_grad_norm: f64,
    pub trace: Vec<IterationRecord>,
    pub termination: Termination,
    pub stats: OptimizerStats,
    pub diagnostics: StepDiagnostics,
}

impl FitResult {
    pub fn final_loss(&self) -> f64 {
        self.trace.last().map_or(self.initial_loss, |r| r.loss)
    }
}

/// Trains `spec` from its seeded initialization on `ts`.
pub fn fit(
    spec: &NetworkSpec,
    ts: &TrainingSet,
    optimizer: &OptimizerConfig,
    budget: &Budget,
    psnr: Option<PsnrScale>,
) -> Result<FitResult> {
    fit_from(spec, ts, init_params(spec)?, optimizer, budget, psnr)
}

pub fn fit_from(
    spec: &NetworkSpec,
    ts: &TrainingSet,
    start: ParamVector,
    optimizer: &OptimizerConfig,
    budget: &Budget,
    psnr: Option<PsnrScale>,
) -> Result<FitResult> {
    let obj = NetworkObjective::new(spec, ts)?;
    let mut trainer = Trainer::new(&obj, start.flat, *optimizer)?.record_diagnostics();
    if let Some(s) = psnr {
        trainer = trainer.with_psnr(s);
    }
    let initial_loss = trainer.loss();
    let initial_grad_norm = trainer.grad_norm();
    let report = trainer.run(budget)?;
    let stats = trainer.stats().clone();
    let diagnostics = trainer.diagnostics().cloned().unwrap_or_default();
    Ok(FitResult {
        params: ParamVector::from_flat(spec, trainer.into_theta())?,
        initial_loss,
        initial_grad_norm,
        trace: report.trace,
        termination: report.termination,
        stats,
        diagnostics,
    })
}
