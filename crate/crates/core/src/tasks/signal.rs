//! Image and audio signals, their coordinate training sets, and PSNR.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::TrainingSet;
use crate::numerics::RealMatrix;

/// Row-major, channel-interleaved pixels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSignal {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<f64>,
}

impl ImageSignal {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Rejected(format!("image dimensions {width}x{height} must be positive")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::Rejected(format!("images have 1 or 3 channels, not {channels}")));
        }
        crate::error::check_dims("image pixel count", width * height * channels, pixels.len())?;
        if let Some(k) = pixels.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Rejected(format!("pixel value {} at index {k} outside [0, 1]", pixels[k])));
        }
        Ok(Self {
            width,
            height,
            channels,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    /// Channel values of the pixel at `(row, col)`.
    pub fn pixel(&self, row: usize, col: usize) -> &[f64] {
        let at = (row * self.width + col) * self.channels;
        &self.pixels[at..at + self.channels]
    }

    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(Error::Rejected(format!(
                "crop {w}x{h}+{x0}+{y0} outside {}x{} image",
                self.width, self.height
            )));
        }
        let mut pixels = Vec::with_capacity(w * h * self.channels);
        for row in y0..y0 + h {
            let at = (row * self.width + x0) * self.channels;
            pixels.extend_from_slice(&self.pixels[at..at + w * self.channels]);
        }
        Self::new(w, h, self.channels, pixels)
    }

    /// Luma (`0.299 R + 0.587 G + 0.114 B`); grayscale images are returned unchanged.
    pub fn to_grayscale(&self) -> Self {
        if self.channels == 1 {
            return self.clone();
        }
        let pixels = self
            .pixels
            .chunks_exact(3)
            .map(|c| (0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]).clamp(0.0, 1.0))
            .collect();
        Self {
            width: self.width,
            height: self.height,
            channels: 1,
            pixels,
        }
    }

    /// Rebuilds an image from network outputs (`width·height × channels`),
    /// clamping to `[0, 1]`. Non-finite outputs become 0.
    pub fn from_outputs(width: usize, height: usize, outputs: &RealMatrix) -> Result<Self> {
        crate::error::check_dims("output rows", width * height, outputs.rows())?;
        let pixels = outputs.as_slice().iter().map(|v| clamp_unit(*v)).collect();
        Self::new(width, height, outputs.cols(), pixels)
    }
}

pub(crate) fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// Maps index `k` of `n` evenly onto `[−1, 1]`; a single index maps to 0.
pub fn normalized_coordinate(k: usize, n: usize) -> f64 {
    if n <= 1 {
        0.0
    } else {
        2.0 * k as f64 / (n - 1) as f64 - 1.0
    }
}

/// Coordinates `(2j/(w−1) − 1, 2i/(h−1) − 1)` for pixel `(i, j)` of a `w×h` grid, row-major.
pub fn grid_coordinates(width: usize, height: usize) -> RealMatrix {
    let mut x = RealMatrix::zeros(width * height, 2);
    for i in 0..height {
        let yi = normalized_coordinate(i, height);
        for j in 0..width {
            let row = x.row_mut(i * width + j);
            row[0] = normalized_coordinate(j, width);
            row[1] = yi;
        }
    }
    x
}

pub fn image_to_training_set(img: &ImageSignal) -> Result<TrainingSet> {
    if img.width * img.height < 2 {
        return Err(Error::Rejected("a 1x1 image has no coordinate range to normalize".into()));
    }
    let x = grid_coordinates(img.width, img.height);
    let y = RealMatrix::from_vec(img.width * img.height, img.channels, img.pixels.clone())?;
    TrainingSet::new(x, y)
}

/// Per-value mean squared error, without the ½ of the training loss.
pub fn mse(a: &[f64], b: &[f64]) -> Result<f64> {
    crate::error::check_dims("mse operands", a.len(), b.len())?;
    if a.is_empty() {
        return Err(Error::Rejected("mse of empty signals".into()));
    }
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += (x - y) * (x - y);
    }
    Ok(s / a.len() as f64)
}

/// `10·log10(peak²/MSE)`; identical signals give `+∞`.
pub fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

/// PSNR in dB with peak 1.
pub fn psnr(reference: &ImageSignal, reconstruction: &ImageSignal) -> Result<f64> {
    if (reference.width, reference.height, reference.channels)
        != (reconstruction.width, reconstruction.height, reconstruction.channels)
    {
        return Err(Error::Rejected(format!(
            "psnr of {}x{}x{} against {}x{}x{}",
            reference.width,
            reference.height,
            reference.channels,
            reconstruction.width,
            reconstruction.height,
            reconstruction.channels
        )));
    }
    Ok(psnr_from_mse(mse(&reference.pixels, &reconstruction.pixels)?, 1.0))
}

/// Peak used for audio PSNR: the width of the `[−1, 1]` sample range.
pub const AUDIO_PEAK: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioSignal {
    sample_rate: u32,
    samples: Vec<f64>,
}

impl AudioSignal {
    pub fn new(sample_rate: u32, samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Rejected(format!("audio needs at least 2 samples, got {}", samples.len())));
        }
        if sample_rate == 0 {
            return Err(Error::Rejected("sample rate must be positive".into()));
        }
        if let Some(k) = samples.iter().position(|s| !(-1.0..=1.0).contains(s)) {
            return Err(Error::Rejected(format!("sample {} at index {k} outside [-1, 1]", samples[k])));
        }
        Ok(Self { sample_rate, samples })
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `amplitude·sin(2π·freq·t)` sampled for `seconds`.
    pub fn tone(freq: f64, sample_rate: u32, seconds: f64, amplitude: f64) -> Result<Self> {
        let n = (seconds * sample_rate as f64).round() as usize;
        let samples = (0..n)
            .map(|k| amplitude * (2.0 * std::f64::consts::PI * freq * k as f64 / sample_rate as f64).sin())
            .collect();
        Self::new(sample_rate, samples)
    }

    /// Rebuilds a signal from network outputs, clamping to `[−1, 1]`.
    pub fn from_outputs(sample_rate: u32, outputs: &RealMatrix) -> Result<Self> {
        crate::error::check_dims("audio output channels", 1, outputs.cols())?;
        let samples = outputs
            .as_slice()
            .iter()
            .map(|v| if v.is_nan() { 0.0 } else { v.clamp(-1.0, 1.0) })
            .collect();
        Self::new(sample_rate, samples)
    }
}

/// Coordinate of sample `k` is `2k/(n−1) − 1`.
pub fn audio_to_training_set(a: &AudioSignal) -> Result<TrainingSet> {
    let n = a.samples.len();
    let x = RealMatrix::from_vec(n, 1, (0..n).map(|k| normalized_coordinate(k, n)).collect())?;
    let y = RealMatrix::from_vec(n, 1, a.samples.clone())?;
    TrainingSet::new(x, y)
}

pub fn audio_psnr(reference: &AudioSignal, reconstruction: &AudioSignal) -> Result<f64> {
    Ok(psnr_from_mse(mse(&reference.samples, &reconstruction.samples)?, AUDIO_PEAK))
}
