//! Files written by the commands: convergence logs, model parameters and the
//! run summary.
//!
//! Convergence CSV columns, in order: `iter,elapsed_ms,loss,grad_norm,psnr`.
//! Row 0 is the initial state; `psnr` is empty when it does not apply.
//!
//! The run summary is a TOML document. Everything except the `[timing]`
//! table is a deterministic function of the `[config]` table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use coordfit::network::{NetworkSpec, ParamVector};
use coordfit::optimizers::{IterationRecord, OptimizerStats};
use serde::{Deserialize, Serialize};

use crate::config::CommandConfig;
use crate::error::{CliError, CliResult};

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;
pub const MODEL_SCHEMA_VERSION: u32 = 1;
pub const SUMMARY_FILE: &str = "summary.toml";
pub const CSV_HEADER: &str = "iter,elapsed_ms,loss,grad_norm,psnr";

/// One row of a convergence log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub iter: usize,
    pub elapsed_ms: f64,
    pub loss: f64,
    pub grad_norm: Option<f64>,
    pub psnr: Option<f64>,
}

impl From<&IterationRecord> for LogRow {
    fn from(r: &IterationRecord) -> Self {
        LogRow {
            iter: r.iter,
            elapsed_ms: r.elapsed_ms,
            loss: r.loss,
            grad_norm: Some(r.grad_norm),
            psnr: r.psnr,
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Keeps row 0, every `log_every`-th iteration and the last row.
pub fn convergence_csv(initial: LogRow, trace: &[IterationRecord], log_every: usize) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    let rows = std::iter::once(initial).chain(trace.iter().map(LogRow::from));
    let last = trace.last().map_or(0, |r| r.iter);
    for row in rows {
        if row.iter == 0 || row.iter % log_every.max(1) == 0 || row.iter == last {
            let _ = writeln!(
                out,
                "{},{:.3},{},{},{}",
                row.iter,
                row.elapsed_ms,
                row.loss,
                opt(row.grad_norm),
                opt(row.psnr)
            );
        }
    }
    out
}

/// Blanks the `elapsed_ms` column, the only wall-clock field of a log.
pub fn mask_elapsed(csv: &str) -> String {
    csv.lines()
        .enumerate()
        .map(|(k, line)| {
            if k == 0 {
                return line.to_string();
            }
            let mut fields: Vec<&str> = line.split(',').collect();
            if fields.len() > 1 {
                fields[1] = "";
            }
            fields.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// A fitted network: architecture plus flat parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub spec: NetworkSpec,
    pub params: Vec<f64>,
}

impl ModelFile {
    pub fn new(spec: &NetworkSpec, params: &ParamVector) -> Self {
        ModelFile {
            schema_version: MODEL_SCHEMA_VERSION,
            spec: spec.clone(),
            params: params.flat.clone(),
        }
    }

    pub fn read(path: &Path) -> CliResult<(NetworkSpec, ParamVector)> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let m: ModelFile = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: not a model file: {e}", path.display())))?;
        if m.schema_version != MODEL_SCHEMA_VERSION {
            return Err(CliError::Config(format!("model schema version {} is not supported", m.schema_version)));
        }
        m.spec.validate()?;
        let params = ParamVector::from_flat(&m.spec, m.params)?;
        Ok((m.spec, params))
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).expect("model serializes");
        std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
    }
}

/// Outcome of one optimizer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub final_loss: f64,
    pub final_psnr: f64,
    pub iterations: usize,
    pub termination: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub termination_detail: Option<String>,
    /// Gradient-norm rate class, or `undetermined` for short runs.
    pub convergence: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_median_ratio: Option<f64>,
    pub stats: OptimizerStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub target_psnr: f64,
    pub lbfgs_iters_to_target: Option<usize>,
    pub adam_iters_to_target: Option<usize>,
    /// Adam iterations over L-BFGS iterations to the target.
    pub iteration_ratio: Option<f64>,
    pub lbfgs: RunResult,
    pub adam: RunResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotSummary {
    pub iter: usize,
    pub zero_fraction: f64,
    pub min_abs_nonzero: Option<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub asymmetry: f64,
    pub eigenvalues_file: String,
    pub histogram_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileSummary {
    pub index: usize,
    pub seed: u64,
    pub samples: usize,
    pub final_loss: Option<f64>,
    pub iterations: usize,
    pub termination: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub csv: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KiloSummary {
    pub tiles: usize,
    pub global_psnr: f64,
    /// Indices of tiles whose training aborted.
    pub failures: Vec<usize>,
    pub tile: Vec<TileSummary>,
}

/// Min-max constants used to map a derivative field onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivsSummary {
    pub gradient: Normalization,
    pub laplacian: Normalization,
    /// Laplacians of multi-channel models are per-channel averages.
    pub channels_averaged: usize,
}

/// Wall-clock measurements, excluded from determinism comparisons.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
    #[serde(flatten)]
    pub phases: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<RunResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshots: Vec<SnapshotSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kilo: Option<KiloSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivs: Option<DerivsSummary>,
    /// Paths relative to the output directory.
    pub artifacts: BTreeMap<String, String>,
    pub config: CommandConfig,
    pub timing: Timing,
}

impl RunSummary {
    pub fn new(config: CommandConfig, seed: u64) -> Self {
        RunSummary {
            schema_version: SUMMARY_SCHEMA_VERSION,
            command: config.name().to_string(),
            seed,
            result: None,
            compare: None,
            snapshots: Vec::new(),
            kilo: None,
            derivs: None,
            artifacts: BTreeMap::new(),
            config,
            timing: Timing::default(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("summary serializes")
    }

    /// The summary with `[timing]` cleared, for determinism comparisons.
    pub fn deterministic_part(&self) -> String {
        let mut s = self.clone();
        s.timing = Timing::default();
        s.to_toml()
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let s: RunSummary = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: not a run summary: {e}", path.display())))?;
        if s.schema_version != SUMMARY_SCHEMA_VERSION {
            return Err(CliError::Config(format!("summary schema version {} is not supported", s.schema_version)));
        }
        Ok(s)
    }
}

/// An output directory that records the artifacts written into it.
pub struct OutDir {
    root: PathBuf,
    written: BTreeMap<String, String>,
}

impl OutDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutDir {
            root: root.to_path_buf(),
            written: BTreeMap::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> CliResult<PathBuf> {
        let p = self.root.join(rel);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        Ok(p)
    }

    /// Records `rel` under `key` once the caller has written it.
    pub fn record(&mut self, key: &str, rel: &str) {
        self.written.insert(key.to_string(), rel.to_string());
    }

    pub fn write_text(&mut self, key: &str, rel: &str, text: &str) -> CliResult<()> {
        let p = self.path(rel)?;
        std::fs::write(&p, text).map_err(|e| CliError::io(&p, e))?;
        self.record(key, rel);
        Ok(())
    }

    /// Writes the summary, listing every artifact recorded so far.
    pub fn finish(&mut self, summary: &mut RunSummary) -> CliResult<PathBuf> {
        self.record("summary", SUMMARY_FILE);
        summary.artifacts = self.written.clone();
        let p = self.path(SUMMARY_FILE)?;
        std::fs::write(&p, summary.to_toml()).map_err(|e| CliError::io(&p, e))?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(iter: usize, loss: f64) -> IterationRecord {
        IterationRecord {
            iter,
            loss,
            grad_norm: 1.0 / iter as f64,
            step_len: 0.1,
            elapsed_ms: 3.25 * iter as f64,
            psnr: Some(10.0 + iter as f64),
        }
    }

    #[test]
    fn csv_keeps_first_strided_and_last_rows() {
        let trace: Vec<_> = (1..=5).map(|k| rec(k, 1.0 / k as f64)).collect();
        let init = LogRow {
            iter: 0,
            elapsed_ms: 0.0,
            loss: 2.0,
            grad_norm: Some(4.0),
            psnr: None,
        };
        let csv = convergence_csv(init, &trace, 2);
        let iters: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(csv.lines().next(), Some(CSV_HEADER));
        assert_eq!(iters, ["0", "2", "4", "5"]);
        assert!(csv.lines().nth(1).unwrap().ends_with(",2,4,"));
    }

    #[test]
    fn masking_blanks_only_elapsed() {
        let m = mask_elapsed("iter,elapsed_ms,loss,grad_norm,psnr\n1,3.250,0.5,1,11");
        assert_eq!(m, "iter,elapsed_ms,loss,grad_norm,psnr\n1,,0.5,1,11");
    }

    #[test]
    fn loss_values_round_trip_exactly() {
        let v = 0.1 + 0.2;
        let csv = convergence_csv(
            LogRow {
                iter: 0,
                elapsed_ms: 0.0,
                loss: v,
                grad_norm: None,
                psnr: None,
            },
            &[],
            1,
        );
        let field = csv.lines().nth(1).unwrap().split(',').nth(2).unwrap();
        assert_eq!(field.parse::<f64>().unwrap().to_bits(), v.to_bits());
    }
}
