//! The experiment commands.
//!
//! Each command resolves its flags into a configuration, then runs that
//! configuration into an output directory. `replay` feeds a summary's
//! configuration back through the same path.

mod derivs;
mod fit;
mod kilofit;
mod spectrum;

use std::path::Path;
use std::time::Instant;

use coordfit::network::{forward, NetworkSpec, ParamVector};
use coordfit::numerics::RealMatrix;
use coordfit::optimizers::{convergence_rate_report, IterationRecord, OptimizerStats, Termination};
use coordfit::tasks::{audio_psnr, psnr, AudioSignal, ImageSignal};

use crate::args::{Cli, Command, ReplayArgs};
use crate::artifacts::{OutDir, RunResult, RunSummary};
use crate::codec::{encode_pnm, encode_wav};
use crate::config::{CommandConfig, Signal};
use crate::error::{CliError, CliResult};

pub use derivs::derivs_config;
pub use fit::{compare_config, fit_config};
pub use kilofit::kilofit_config;
pub use spectrum::spectrum_config;

/// A finished run: its summary, and the reason if it aborted numerically.
#[derive(Debug)]
pub struct Outcome {
    pub summary: RunSummary,
    pub abort: Option<String>,
}

impl Outcome {
    fn into_result(self) -> CliResult<RunSummary> {
        match self.abort {
            Some(msg) => Err(CliError::Numerical(msg)),
            None => Ok(self.summary),
        }
    }
}

/// Runs one parsed command line.
pub fn run(cli: Cli) -> CliResult<RunSummary> {
    let (config, out) = match cli.command {
        Command::Fit(a) => (CommandConfig::Fit(fit_config(&a)?), a.out),
        Command::Compare(a) => (CommandConfig::Compare(compare_config(&a)?), a.out),
        Command::Spectrum(a) => (CommandConfig::Spectrum(spectrum_config(&a)?), a.out),
        Command::Derivs(a) => (CommandConfig::Derivs(derivs_config(&a)?), a.out),
        Command::Kilofit(a) => (CommandConfig::Kilofit(kilofit_config(&a)?), a.out),
        Command::Replay(a) => return replay(&a),
    };
    execute(&config, &out)?.into_result()
}

/// Runs a resolved configuration, writing artifacts and `summary.toml` to `out`.
pub fn execute(config: &CommandConfig, out: &Path) -> CliResult<Outcome> {
    let start = Instant::now();
    let mut dir = OutDir::create(out)?;
    let mut outcome = match config {
        CommandConfig::Fit(c) => fit::run_fit(c, &mut dir)?,
        CommandConfig::Compare(c) => fit::run_compare(c, &mut dir)?,
        CommandConfig::Spectrum(c) => spectrum::run(c, &mut dir)?,
        CommandConfig::Derivs(c) => derivs::run(c, &mut dir)?,
        CommandConfig::Kilofit(c) => kilofit::run(c, &mut dir)?,
    };
    outcome.summary.timing.wall_seconds = start.elapsed().as_secs_f64();
    dir.finish(&mut outcome.summary)?;
    Ok(outcome)
}

/// Repeats the run recorded in a summary and checks that everything outside
/// `[timing]` comes out identical.
pub fn replay(args: &ReplayArgs) -> CliResult<RunSummary> {
    let original = RunSummary::read(&args.summary)?;
    let out = match &args.out {
        Some(p) => p.clone(),
        None => args.summary.parent().unwrap_or(Path::new(".")).join("replay"),
    };
    let outcome = execute(&original.config, &out)?;
    let again = &outcome.summary;
    if let (Some(a), Some(b)) = (&original.result, &again.result) {
        if a.final_loss.to_bits() != b.final_loss.to_bits() {
            return Err(CliError::Mismatch(format!(
                "final loss {:e} was recorded as {:e}",
                b.final_loss, a.final_loss
            )));
        }
    }
    if original.deterministic_part() != again.deterministic_part() {
        return Err(CliError::Mismatch(format!(
            "summary in {} differs from the recorded one outside [timing]",
            out.display()
        )));
    }
    outcome.into_result()
}

pub(crate) fn check_io_dims(spec: &NetworkSpec, signal: &Signal) -> CliResult<()> {
    if spec.input_dim != signal.input_dim() || spec.output_dim != signal.channels() {
        return Err(CliError::Config(format!(
            "network maps {} inputs to {} outputs, the signal needs {} to {}",
            spec.input_dim,
            spec.output_dim,
            signal.input_dim(),
            signal.channels()
        )));
    }
    Ok(())
}

/// Evaluates the network on every coordinate of `signal`, writes the
/// reconstruction as `<stem>.pgm|ppm|wav` and returns its PSNR.
pub(crate) fn write_reconstruction(
    dir: &mut OutDir,
    key: &str,
    stem: &str,
    signal: &Signal,
    x: &RealMatrix,
    spec: &NetworkSpec,
    params: &ParamVector,
) -> CliResult<f64> {
    let y = forward(spec, params, x)?;
    let (bytes, ext, quality) = match signal {
        Signal::Image(img) => {
            let rec = ImageSignal::from_outputs(img.width(), img.height(), &y)?;
            let ext = if img.channels() == 1 { "pgm" } else { "ppm" };
            (encode_pnm(&rec)?, ext, psnr(img, &rec)?)
        }
        Signal::Audio(a) => {
            let rec = AudioSignal::from_outputs(a.sample_rate(), &y)?;
            (encode_wav(&rec), "wav", audio_psnr(a, &rec)?)
        }
    };
    let rel = format!("{stem}.{ext}");
    let p = dir.path(&rel)?;
    std::fs::write(&p, bytes).map_err(|e| CliError::io(&p, e))?;
    dir.record(key, &rel);
    Ok(quality)
}

pub(crate) fn run_result(
    final_loss: f64,
    final_psnr: f64,
    trace: &[IterationRecord],
    termination: &Termination,
    stats: &OptimizerStats,
) -> RunResult {
    let rate = convergence_rate_report(trace).ok();
    RunResult {
        final_loss,
        final_psnr,
        iterations: trace.last().map_or(0, |r| r.iter),
        termination: termination.name().to_string(),
        termination_detail: match termination {
            Termination::LineSearchFailure(m) | Termination::NonFinite(m) => Some(m.clone()),
            _ => None,
        },
        convergence: rate
            .as_ref()
            .map_or_else(|| "undetermined".to_string(), |r| r.classification.name().to_string()),
        tail_median_ratio: rate.map(|r| r.tail_median),
        stats: stats.clone(),
    }
}

pub(crate) fn abort_reason(termination: &Termination) -> Option<String> {
    match termination {
        Termination::NonFinite(m) => Some(m.clone()),
        _ => None,
    }
}
