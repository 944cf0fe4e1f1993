//! Full-batch optimizers and the training loop that drives them.

pub mod bfgs;
pub mod driver;
pub mod first_order;
pub mod lbfgs;
pub mod line_search;
pub mod newton;
pub mod objective;
pub mod rate;
pub mod testfns;

/// Largest parameter count for which dense BFGS keeps a `p×p` matrix.
pub const BFGS_MAX_PARAMS: usize = 5000;

pub use bfgs::{bfgs_update, secant_residual, BfgsUpdate, CURVATURE_EPS};
pub use driver::{
    run_optimizer, Budget, IterationRecord, OptimizerConfig, OptimizerKind, OptimizerOutcome, OptimizerStats,
    PsnrScale, RunReport, StepDiagnostics, Termination, Trainer, DEFAULT_GD_LR,
};
pub use first_order::{gd_step, AdamConfig, AdamState};
pub use lbfgs::{InitialScaling, LbfgsState, DEFAULT_HISTORY};
pub use line_search::{wolfe_line_search, LineSearchResult, StepCheck, WolfeConfig};
pub use newton::{newton_step, NewtonStep, NEWTON_MAX_PARAMS};
pub use objective::{NetworkObjective, Objective};
pub use rate::{convergence_rate_from_norms, convergence_rate_report, RateClass, RateReport};
