//! Empirical convergence-rate classification from gradient-norm traces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizers::IterationRecord;

/// Ratios are summarized over this many final iterations.
pub const TAIL_LEN: usize = 10;
/// Traces shorter than this are rejected.
pub const MIN_TRACE_LEN: usize = 12;
/// Tail medians below this are classified superlinear-consistent.
pub const SUPERLINEAR_BELOW: f64 = 0.5;
/// Tail medians up to this are classified linear-consistent.
pub const LINEAR_UP_TO: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateClass {
    SuperlinearConsistent,
    LinearConsistent,
    Stalled,
}

impl RateClass {
    pub fn name(self) -> &'static str {
        match self {
            Self::SuperlinearConsistent => "superlinear-consistent",
            Self::LinearConsistent => "linear-consistent",
            Self::Stalled => "stalled",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// `ratios[k] = ‖g_{k+1}‖ / ‖g_k‖` over consecutive records.
    pub ratios: Vec<f64>,
    pub tail_median: f64,
    pub classification: RateClass,
    pub superlinear_below: f64,
    pub linear_up_to: f64,
}

pub fn classify_ratio(median: f64) -> RateClass {
    if median < SUPERLINEAR_BELOW {
        RateClass::SuperlinearConsistent
    } else if median <= LINEAR_UP_TO {
        RateClass::LinearConsistent
    } else {
        RateClass::Stalled
    }
}

pub fn convergence_rate_report(trace: &[IterationRecord]) -> Result<RateReport> {
    let norms: Vec<f64> = trace.iter().map(|r| r.grad_norm).collect();
    convergence_rate_from_norms(&norms)
}

pub fn convergence_rate_from_norms(norms: &[f64]) -> Result<RateReport> {
    if norms.len() < MIN_TRACE_LEN {
        return Err(Error::Rejected(format!(
            "rate report needs at least {MIN_TRACE_LEN} records, got {}",
            norms.len()
        )));
    }
    let ratios: Vec<f64> = norms.windows(2).map(|w| w[1] / w[0]).collect();
    let mut tail: Vec<f64> = ratios[ratios.len() - TAIL_LEN..].to_vec();
    // NaN (0/0 after exact convergence) sorts last and is treated as stalled.
    tail.sort_by(|a, b| a.total_cmp(b));
    let tail_median = 0.5 * (tail[TAIL_LEN / 2 - 1] + tail[TAIL_LEN / 2]);
    Ok(RateReport {
        classification: classify_ratio(tail_median),
        ratios,
        tail_median,
        superlinear_below: SUPERLINEAR_BELOW,
        linear_up_to: LINEAR_UP_TO,
    })
}
