//! Derivatives of the network output with respect to its input coordinates.

use crate::error::{check_dims, Error, Result};
use crate::network::model::{check_params, forward_chunk};
use crate::network::{NetworkSpec, ParamVector};

/// Step for the central-difference Laplacian.
pub const LAPLACIAN_STEP: f64 = 1e-4;

/// `∂f_channel/∂x` at a single input point, by reverse-mode accumulation.
pub fn output_input_gradient(spec: &NetworkSpec, params: &ParamVector, x: &[f64], channel: usize) -> Result<Vec<f64>> {
    check_params(spec, params)?;
    check_dims("input point", spec.input_dim, x.len())?;
    if channel >= spec.output_dim {
        return Err(Error::Rejected(format!(
            "output channel {channel} out of range for {} outputs",
            spec.output_dim
        )));
    }
    let tape = forward_chunk(spec, params, x, 1, true)?;
    let layers = params.num_layers();
    let mut g = vec![0.0; spec.output_dim];
    g[channel] = 1.0;
    let mut grad_encoded = Vec::new();
    for l in (0..layers).rev() {
        let lay = params.layout[l];
        let w = params.weights(l);
        // dh[k] = Σ_j W[k][j] g[j]
        let mut dh = vec![0.0; lay.fan_in];
        for (k, dk) in dh.iter_mut().enumerate() {
            let row = &w[k * lay.fan_out..(k + 1) * lay.fan_out];
            for (wkj, gj) in row.iter().zip(&g) {
                *dk += wkj * gj;
            }
        }
        if l == 0 {
            grad_encoded = dh;
            break;
        }
        for (v, dv) in dh.iter_mut().zip(&tape.derivs[l - 1]) {
            *v *= dv;
        }
        g = dh;
    }
    let grad = spec.encoding.pullback(x, &grad_encoded);
    if grad.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("input gradient".into()));
    }
    Ok(grad)
}

/// `Σⱼ ∂²f/∂xⱼ²` for a scalar-output network, by central differences of the
/// analytic input gradient with step [`LAPLACIAN_STEP`].
pub fn output_laplacian(spec: &NetworkSpec, params: &ParamVector, x: &[f64]) -> Result<f64> {
    if spec.output_dim != 1 {
        return Err(Error::Rejected(format!(
            "laplacian needs a scalar-output network, this one has {} outputs",
            spec.output_dim
        )));
    }
    channel_laplacian(spec, params, x, 0)
}

/// Laplacian of one output channel.
pub fn channel_laplacian(spec: &NetworkSpec, params: &ParamVector, x: &[f64], channel: usize) -> Result<f64> {
    let h = LAPLACIAN_STEP;
    let mut lap = 0.0;
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        xp[j] = x[j] + h;
        let gp = output_input_gradient(spec, params, &xp, channel)?[j];
        xp[j] = x[j] - h;
        let gm = output_input_gradient(spec, params, &xp, channel)?[j];
        xp[j] = x[j];
        lap += (gp - gm) / (2.0 * h);
    }
    Ok(lap)
}
