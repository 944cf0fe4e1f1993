//! `spectrum`: eigenvalue census of the loss Hessian during training.

use coordfit::curvature::{spectrum_trace, SpectrumConfig, DEFAULT_WINDOW};
use coordfit::network::mse_loss;
use coordfit::network::init_params;
use coordfit::optimizers::{OptimizerConfig, Termination};

use super::{abort_reason, check_io_dims, run_result, Outcome};
use crate::args::SpectrumArgs;
use crate::artifacts::{OutDir, RunSummary, SnapshotSummary};
use crate::config::{network_spec, CommandConfig, Crop, Input, SpectrumRunConfig};
use crate::error::CliResult;

pub fn spectrum_config(a: &SpectrumArgs) -> CliResult<SpectrumRunConfig> {
    let input = Input::image(&a.image, a.crop.map(|(w, h)| Crop { w, h }))?;
    let img = input.load_image()?;
    let cfg = SpectrumRunConfig {
        input,
        network: network_spec(
            a.activation,
            a.omega,
            a.sigma,
            a.width,
            a.depth,
            a.pe_frequencies,
            2,
            img.channels(),
            a.seed,
        )?,
        optimizer: OptimizerConfig::new(a.optimizer),
        iters: a.iters,
        snapshot_every: a.snapshot_every.unwrap_or(a.iters.max(1)),
        spectrum: SpectrumConfig {
            zero_tol: a.zero_tol,
            window: a.window.unwrap_or(DEFAULT_WINDOW),
            bins: a.bins,
        },
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cfg: &SpectrumRunConfig, dir: &mut OutDir) -> CliResult<Outcome> {
    cfg.validate()?;
    let signal = cfg.input.load()?;
    check_io_dims(&cfg.network, &signal)?;
    let ts = signal.training_set()?;
    let st = spectrum_trace(&cfg.network, &ts, &cfg.optimizer, cfg.iters, cfg.snapshot_every, &cfg.spectrum)?;
    let mut snapshots = Vec::with_capacity(st.reports.len());
    for (k, r) in st.reports.iter().enumerate() {
        let eig = format!("spectrum/eigenvalues_{k:03}_iter{:05}.txt", r.theta_snapshot_iter);
        let hist = format!("spectrum/histogram_{k:03}_iter{:05}.csv", r.theta_snapshot_iter);
        dir.write_text(&format!("eigenvalues_{k:03}"), &eig, &r.eigenvalues_text())?;
        dir.write_text(&format!("histogram_{k:03}"), &hist, &r.histogram_csv())?;
        snapshots.push(SnapshotSummary {
            iter: r.theta_snapshot_iter,
            zero_fraction: r.zero_fraction,
            min_abs_nonzero: r.min_abs_nonzero,
            lambda_min: r.lambda_min,
            lambda_max: r.lambda_max,
            asymmetry: r.asymmetry,
            eigenvalues_file: eig,
            histogram_file: hist,
        });
    }
    let final_loss = match st.trace.last() {
        Some(r) => r.loss,
        None => mse_loss(&cfg.network, &init_params(&cfg.network)?, &ts)?,
    };
    let termination = st.early_stop.clone().unwrap_or(Termination::MaxIters);
    let mut summary = RunSummary::new(CommandConfig::Spectrum(cfg.clone()), cfg.network.seed);
    let psnr = signal.psnr_scale().psnr(final_loss);
    summary.result = Some(run_result(final_loss, psnr, &st.trace, &termination, &st.stats));
    summary.snapshots = snapshots;
    Ok(Outcome {
        summary,
        abort: abort_reason(&termination),
    })
}
