//! Resolved run configurations. Each is echoed into the run summary in full,
//! so a summary alone is enough to repeat the run.

use std::path::{Path, PathBuf};

use coordfit::curvature::{SpectrumConfig, HESSIAN_MAX_PARAMS};
use coordfit::network::{Activation, NetworkSpec, PositionalEncoding, TrainingSet};
use coordfit::optimizers::{OptimizerConfig, PsnrScale};
use coordfit::tasks::{audio_to_training_set, image_to_training_set, AudioSignal, ImageSignal, AUDIO_PEAK};
use serde::{Deserialize, Serialize};

use crate::args::{ActivationName, InputArgs, NetworkArgs};
use crate::codec::{read_audio, read_image};
use crate::error::{CliError, CliResult};

/// A centered crop of `w×h` pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crop {
    pub w: usize,
    pub h: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Input {
    Image {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        crop: Option<Crop>,
    },
    Audio {
        path: PathBuf,
    },
}

pub enum Signal {
    Image(ImageSignal),
    Audio(AudioSignal),
}

impl Signal {
    pub fn training_set(&self) -> CliResult<TrainingSet> {
        Ok(match self {
            Signal::Image(img) => image_to_training_set(img)?,
            Signal::Audio(a) => audio_to_training_set(a)?,
        })
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Signal::Image(_) => 2,
            Signal::Audio(_) => 1,
        }
    }

    pub fn channels(&self) -> usize {
        match self {
            Signal::Image(img) => img.channels(),
            Signal::Audio(_) => 1,
        }
    }

    pub fn psnr_scale(&self) -> PsnrScale {
        PsnrScale {
            peak: match self {
                Signal::Image(_) => 1.0,
                Signal::Audio(_) => AUDIO_PEAK,
            },
            channels: self.channels(),
        }
    }
}

fn absolute(path: &Path) -> CliResult<PathBuf> {
    std::fs::canonicalize(path).map_err(|e| CliError::io(path, e))
}

impl Input {
    pub fn from_args(args: &InputArgs) -> CliResult<Self> {
        match (&args.image, &args.audio) {
            (Some(p), None) => Ok(Input::Image {
                path: absolute(p)?,
                crop: None,
            }),
            (None, Some(p)) => Ok(Input::Audio { path: absolute(p)? }),
            _ => Err(CliError::Config("exactly one of --image and --audio is required".into())),
        }
    }

    pub fn image(path: &Path, crop: Option<Crop>) -> CliResult<Self> {
        Ok(Input::Image {
            path: absolute(path)?,
            crop,
        })
    }

    pub fn load(&self) -> CliResult<Signal> {
        match self {
            Input::Image { path, crop } => {
                let img = read_image(path)?;
                match crop {
                    None => Ok(Signal::Image(img)),
                    Some(c) => {
                        if c.w > img.width() || c.h > img.height() || c.w == 0 || c.h == 0 {
                            return Err(CliError::Config(format!(
                                "crop {}x{} does not fit in a {}x{} image",
                                c.w,
                                c.h,
                                img.width(),
                                img.height()
                            )));
                        }
                        let x0 = (img.width() - c.w) / 2;
                        let y0 = (img.height() - c.h) / 2;
                        Ok(Signal::Image(img.crop(x0, y0, c.w, c.h)?))
                    }
                }
            }
            Input::Audio { path } => Ok(Signal::Audio(read_audio(path)?)),
        }
    }

    pub fn load_image(&self) -> CliResult<ImageSignal> {
        match self.load()? {
            Signal::Image(img) => Ok(img),
            Signal::Audio(_) => Err(CliError::Config("this command needs an image input".into())),
        }
    }
}

/// Builds `input → [width; depth] → output` for the named activation.
#[allow(clippy::too_many_arguments)]
pub fn network_spec(
    activation: ActivationName,
    omega: f64,
    sigma: f64,
    width: usize,
    depth: usize,
    pe_frequencies: usize,
    input_dim: usize,
    output_dim: usize,
    seed: u64,
) -> CliResult<NetworkSpec> {
    let act = match activation {
        ActivationName::Relu | ActivationName::ReluPe => Activation::Relu,
        ActivationName::Tanh => Activation::Tanh,
        ActivationName::Sine => Activation::Sine { omega },
        ActivationName::Gaussian => Activation::Gaussian { mu: 0.0, sigma },
    };
    let mut spec = NetworkSpec::new(input_dim, vec![width; depth], output_dim, act).with_seed(seed);
    if activation == ActivationName::ReluPe {
        spec = spec.with_encoding(PositionalEncoding::with_frequencies(pe_frequencies));
    }
    spec.validate()?;
    Ok(spec)
}

impl NetworkArgs {
    pub fn spec(&self, input_dim: usize, output_dim: usize) -> CliResult<NetworkSpec> {
        network_spec(
            self.activation,
            self.omega,
            self.sigma,
            self.width,
            self.depth,
            self.pe_frequencies,
            input_dim,
            output_dim,
            self.seed,
        )
    }
}

/// `2→[16,16]→1`-style label.
pub fn architecture(spec: &NetworkSpec) -> String {
    let hidden: Vec<String> = spec.hidden_widths.iter().map(|w| w.to_string()).collect();
    let pe = if spec.encoding.enabled {
        format!(" with {}-frequency encoding", spec.encoding.num_frequencies)
    } else {
        String::new()
    };
    format!("{} {}→[{}]→{}{pe}", spec.activation.name(), spec.input_dim, hidden.join(","), spec.output_dim)
}

fn check_positive(name: &str, v: usize) -> CliResult<()> {
    if v == 0 {
        return Err(CliError::Config(format!("{name} must be at least 1")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub input: Input,
    pub network: NetworkSpec,
    pub optimizer: OptimizerConfig,
    pub iters: usize,
    pub target_psnr: Option<f64>,
    pub max_samples: Option<usize>,
    pub log_every: usize,
}

impl FitConfig {
    pub fn validate(&self) -> CliResult<()> {
        self.network.validate()?;
        self.optimizer.validate()?;
        check_positive("--log-every", self.log_every)?;
        if let Some(n) = self.max_samples {
            check_positive("--max-samples", n)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub input: Input,
    pub network: NetworkSpec,
    pub lbfgs: OptimizerConfig,
    pub adam: OptimizerConfig,
    pub iters: usize,
    pub target_psnr: f64,
    pub max_samples: Option<usize>,
    pub log_every: usize,
}

impl CompareConfig {
    pub fn validate(&self) -> CliResult<()> {
        self.network.validate()?;
        self.lbfgs.validate()?;
        self.adam.validate()?;
        check_positive("--log-every", self.log_every)?;
        if let Some(n) = self.max_samples {
            check_positive("--max-samples", n)?;
        }
        if !self.target_psnr.is_finite() {
            return Err(CliError::Config("--target-psnr must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRunConfig {
    pub input: Input,
    pub network: NetworkSpec,
    pub optimizer: OptimizerConfig,
    pub iters: usize,
    pub snapshot_every: usize,
    pub spectrum: SpectrumConfig,
}

impl SpectrumRunConfig {
    pub fn validate(&self) -> CliResult<()> {
        self.network.validate()?;
        self.optimizer.validate()?;
        self.spectrum.validate()?;
        check_positive("--snapshot-every", self.snapshot_every)?;
        let p = self.network.param_count();
        if p > HESSIAN_MAX_PARAMS {
            return Err(CliError::Config(format!(
                "{} has {p} parameters, above the curvature cap of {HESSIAN_MAX_PARAMS}",
                architecture(&self.network)
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivsConfig {
    pub model: PathBuf,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KilofitConfig {
    pub input: Input,
    /// Per-tile architecture; `seed` is the global seed.
    pub network: NetworkSpec,
    pub optimizer: OptimizerConfig,
    pub tile_w: usize,
    pub tile_h: usize,
    pub iters_per_tile: usize,
    pub report_every: usize,
    pub max_samples: usize,
    pub parallel: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inject_fault: Option<usize>,
}

/// The configuration of any command, tagged by command name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandConfig {
    Fit(FitConfig),
    Compare(CompareConfig),
    Spectrum(SpectrumRunConfig),
    Derivs(DerivsConfig),
    Kilofit(KilofitConfig),
}

impl CommandConfig {
    pub fn name(&self) -> &'static str {
        match self {
            CommandConfig::Fit(_) => "fit",
            CommandConfig::Compare(_) => "compare",
            CommandConfig::Spectrum(_) => "spectrum",
            CommandConfig::Derivs(_) => "derivs",
            CommandConfig::Kilofit(_) => "kilofit",
        }
    }
}
