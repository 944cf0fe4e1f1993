//! Command-line flags.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coordfit::network::{DEFAULT_FREQUENCIES, DEFAULT_OMEGA, DEFAULT_SIGMA};
use coordfit::optimizers::OptimizerKind;

#[derive(Debug, Parser)]
#[command(name = "coordfit", version, about = "Fit coordinate MLPs to images and audio")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one network to an image or audio clip.
    Fit(FitArgs),
    /// Race L-BFGS against Adam on the same network and seed.
    Compare(CompareArgs),
    /// Track the loss-Hessian eigenvalue census during training.
    Spectrum(SpectrumArgs),
    /// Render the input gradient and Laplacian of a fitted image model.
    Derivs(DerivsArgs),
    /// Fit one small network per image tile and stitch the result.
    Kilofit(KilofitArgs),
    /// Re-run a command from its summary file and check the result matches.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ActivationName {
    Relu,
    /// ReLU on positionally encoded inputs.
    ReluPe,
    Tanh,
    Sine,
    Gaussian,
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct InputArgs {
    /// PGM or PPM image.
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Mono 16-bit PCM WAV file.
    #[arg(long)]
    pub audio: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct NetworkArgs {
    #[arg(long, value_enum, default_value = "sine")]
    pub activation: ActivationName,
    /// Sine frequency factor.
    #[arg(long, default_value_t = DEFAULT_OMEGA)]
    pub omega: f64,
    /// Gaussian width.
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    pub sigma: f64,
    /// Hidden layer width.
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    /// Number of hidden layers.
    #[arg(long, default_value_t = 4)]
    pub depth: usize,
    /// Positional-encoding frequencies for `relu-pe`.
    #[arg(long, default_value_t = DEFAULT_FREQUENCIES)]
    pub pe_frequencies: usize,
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u64).range(0..=i64::MAX as u64))]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub network: NetworkArgs,
    #[arg(long, default_value = "lbfgs")]
    pub optimizer: OptimizerKind,
    #[arg(long, default_value_t = 200)]
    pub iters: usize,
    /// Stop once the training PSNR reaches this many dB.
    #[arg(long)]
    pub target_psnr: Option<f64>,
    /// Train on a seeded subset of at most this many samples.
    #[arg(long)]
    pub max_samples: Option<usize>,
    /// Write every N-th iteration to the convergence CSV.
    #[arg(long, default_value_t = 1)]
    pub log_every: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub network: NetworkArgs,
    #[arg(long, default_value_t = 1000)]
    pub iters: usize,
    #[arg(long, default_value_t = 30.0)]
    pub target_psnr: f64,
    /// Adam learning rate.
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long)]
    pub max_samples: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub log_every: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub image: PathBuf,
    /// Centered crop, as `WxH`.
    #[arg(long, value_parser = parse_dims)]
    pub crop: Option<(usize, usize)>,
    #[arg(long, value_enum, default_value = "sine")]
    pub activation: ActivationName,
    #[arg(long, default_value_t = DEFAULT_OMEGA)]
    pub omega: f64,
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    pub sigma: f64,
    #[arg(long, default_value_t = 16)]
    pub width: usize,
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    #[arg(long, default_value_t = DEFAULT_FREQUENCIES)]
    pub pe_frequencies: usize,
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u64).range(0..=i64::MAX as u64))]
    pub seed: u64,
    #[arg(long, default_value = "lbfgs")]
    pub optimizer: OptimizerKind,
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
    /// Iterations between snapshots; defaults to `--iters`.
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    /// Eigenvalues below this magnitude count as zero.
    #[arg(long, default_value_t = coordfit::curvature::DEFAULT_ZERO_TOL)]
    pub zero_tol: f64,
    /// Histogram window, as `LO,HI`.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    pub window: Option<(f64, f64)>,
    #[arg(long, default_value_t = coordfit::curvature::DEFAULT_BINS)]
    pub bins: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DerivsArgs {
    /// Model file written by `fit`.
    #[arg(long)]
    pub model: PathBuf,
    /// Image width in pixels.
    #[arg(long)]
    pub width: usize,
    /// Image height in pixels.
    #[arg(long)]
    pub height: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct KilofitArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub tile_w: usize,
    #[arg(long, default_value_t = 64)]
    pub tile_h: usize,
    #[arg(long, default_value_t = 50)]
    pub iters_per_tile: usize,
    /// Worker threads; 0 uses one per core.
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    #[command(flatten)]
    pub network: NetworkArgs,
    #[arg(long, default_value = "lbfgs")]
    pub optimizer: OptimizerKind,
    /// Per-tile cap on training samples.
    #[arg(long, default_value_t = coordfit::tasks::MAX_TILE_SAMPLES)]
    pub max_samples: usize,
    /// Iterations between stitched-PSNR reports; 0 reports only at the end.
    #[arg(long, default_value_t = 10)]
    pub log_every: usize,
    /// Testing hook: drive this tile's loss to overflow.
    #[arg(long, hide = true)]
    pub inject_fault: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// Summary file of the run to repeat.
    #[arg(long)]
    pub summary: PathBuf,
    /// Output directory; defaults to `replay/` beside the summary.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WxH, got {s:?}"))?;
    let w = w.trim().parse().map_err(|_| format!("bad width in {s:?}"))?;
    let h = h.trim().parse().map_err(|_| format!("bad height in {s:?}"))?;
    Ok((w, h))
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or_else(|| format!("expected LO,HI, got {s:?}"))?;
    let lo = lo.trim().parse().map_err(|_| format!("bad lower bound in {s:?}"))?;
    let hi = hi.trim().parse().map_err(|_| format!("bad upper bound in {s:?}"))?;
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "coordfit", "fit", "--image", "a.pgm", "--activation", "relu-pe", "--optimizer", "adam", "--out", "o",
        ])
        .unwrap();
        let Command::Fit(f) = cli.command else { panic!() };
        assert_eq!(f.network.activation, ActivationName::ReluPe);
        assert_eq!(f.optimizer, OptimizerKind::Adam);
        assert_eq!(f.iters, 200);
    }

    #[test]
    fn image_and_audio_are_exclusive() {
        assert!(Cli::try_parse_from(["coordfit", "fit", "--image", "a", "--audio", "b", "--out", "o"]).is_err());
        assert!(Cli::try_parse_from(["coordfit", "fit", "--out", "o"]).is_err());
    }

    #[test]
    fn dims_and_window() {
        assert_eq!(parse_dims("50x40"), Ok((50, 40)));
        assert!(parse_dims("50").is_err());
        assert_eq!(parse_window("-0.5,0.5"), Ok((-0.5, 0.5)));
    }
}
