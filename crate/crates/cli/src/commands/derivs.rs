//! `derivs`: input gradient and Laplacian maps of a fitted image model.

use coordfit::network::{channel_laplacian, output_input_gradient};
use coordfit::tasks::{grid_coordinates, ImageSignal};

use super::{write_reconstruction, Outcome};
use crate::args::DerivsArgs;
use crate::artifacts::{DerivsSummary, ModelFile, Normalization, OutDir, RunSummary};
use crate::codec::encode_pnm;
use crate::config::{CommandConfig, DerivsConfig, Signal};
use crate::error::{CliError, CliResult};

pub fn derivs_config(a: &DerivsArgs) -> CliResult<DerivsConfig> {
    let model = std::fs::canonicalize(&a.model).map_err(|e| CliError::io(&a.model, e))?;
    Ok(DerivsConfig {
        model,
        width: a.width,
        height: a.height,
    })
}

/// Maps `values` linearly onto `[0, 1]`; a constant field maps to 0.
fn normalize(values: &[f64]) -> (Vec<f64>, Normalization) {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    let mapped = if range > 0.0 && range.is_finite() {
        values.iter().map(|v| (v - min) / range).collect()
    } else {
        vec![0.0; values.len()]
    };
    (mapped, Normalization { min, max })
}

fn write_map(dir: &mut OutDir, key: &str, w: usize, h: usize, values: &[f64]) -> CliResult<Normalization> {
    let (mapped, norm) = normalize(values);
    let img = ImageSignal::new(w, h, 1, mapped)?;
    let rel = format!("{key}.pgm");
    let p = dir.path(&rel)?;
    std::fs::write(&p, encode_pnm(&img)?).map_err(|e| CliError::io(&p, e))?;
    dir.record(key, &rel);
    Ok(norm)
}

pub fn run(cfg: &DerivsConfig, dir: &mut OutDir) -> CliResult<Outcome> {
    let (spec, params) = ModelFile::read(&cfg.model)?;
    if spec.input_dim != 2 || !(spec.output_dim == 1 || spec.output_dim == 3) {
        return Err(CliError::Config(format!(
            "derivative maps need an image model (2 inputs, 1 or 3 outputs), this one maps {} to {}",
            spec.input_dim, spec.output_dim
        )));
    }
    if cfg.width < 2 || cfg.height < 2 {
        return Err(CliError::Config(format!("image size {}x{} is below 2x2", cfg.width, cfg.height)));
    }
    let x = grid_coordinates(cfg.width, cfg.height);
    let blank = ImageSignal::filled(cfg.width, cfg.height, spec.output_dim, 0.0)?;
    write_reconstruction(dir, "reconstruction", "reconstruction", &Signal::Image(blank), &x, &spec, &params)?;

    let c = spec.output_dim;
    let n = x.rows();
    let mut grad = vec![0.0; n];
    let mut lap = vec![0.0; n];
    for k in 0..n {
        let p = x.row(k);
        for ch in 0..c {
            let g = output_input_gradient(&spec, &params, p, ch)?;
            grad[k] += g.iter().map(|v| v * v).sum::<f64>().sqrt();
            lap[k] += channel_laplacian(&spec, &params, p, ch)?;
        }
        grad[k] /= c as f64;
        lap[k] /= c as f64;
    }
    let gradient = write_map(dir, "gradient", cfg.width, cfg.height, &grad)?;
    let laplacian = write_map(dir, "laplacian", cfg.width, cfg.height, &lap)?;
    let mut summary = RunSummary::new(CommandConfig::Derivs(cfg.clone()), spec.seed);
    summary.derivs = Some(DerivsSummary {
        gradient,
        laplacian,
        channels_averaged: c,
    });
    Ok(Outcome { summary, abort: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_spans_unit_interval() {
        let (m, n) = normalize(&[2.0, 4.0, 3.0]);
        assert_eq!(m, [0.0, 1.0, 0.5]);
        assert_eq!(n, Normalization { min: 2.0, max: 4.0 });
        let (m, _) = normalize(&[0.0, 0.0]);
        assert_eq!(m, [0.0, 0.0]);
    }
}
