//! Forward evaluation, MSE loss and its reverse-mode parameter gradient.
//!
//! Samples are processed in fixed-size row chunks to bound memory. Every
//! gradient entry is accumulated over samples in ascending order, so the
//! chunk size never changes a single bit of the result.

use crate::error::{check_dims, Error, Result};
use crate::network::{NetworkSpec, ParamVector, TrainingSet};
use crate::numerics::{gemm_acc, gemm_tn_acc, transpose_into, RealMatrix};

const CHUNK_ROWS: usize = 1024;

/// Activations recorded on the forward pass of one chunk.
pub(super) struct Tape {
    /// Input to each affine layer, `rows × fan_in`.
    pub(super) inputs: Vec<Vec<f64>>,
    /// Activation derivative at each hidden layer's pre-activation.
    pub(super) derivs: Vec<Vec<f64>>,
    /// Network output, `rows × output_dim`.
    pub(super) output: Vec<f64>,
}

pub(super) fn check_params(spec: &NetworkSpec, params: &ParamVector) -> Result<()> {
    spec.validate()?;
    check_dims("parameter vector length", spec.param_count(), params.len())?;
    if params.layout != spec.layout() {
        return Err(Error::Rejected("parameter layout does not match network spec".into()));
    }
    Ok(())
}

fn encode_rows(spec: &NetworkSpec, x: &[f64], rows: usize) -> Vec<f64> {
    let d = spec.input_dim;
    if !spec.encoding.enabled {
        return x[..rows * d].to_vec();
    }
    let e = spec.encoded_dim();
    let mut out = vec![0.0; rows * e];
    for r in 0..rows {
        spec.encoding.encode_into(&x[r * d..(r + 1) * d], &mut out[r * e..(r + 1) * e]);
    }
    out
}

pub(super) fn forward_chunk(spec: &NetworkSpec, params: &ParamVector, x: &[f64], rows: usize, record: bool) -> Result<Tape> {
    let layers = params.num_layers();
    let mut tape = Tape {
        inputs: Vec::with_capacity(layers),
        derivs: Vec::with_capacity(layers),
        output: Vec::new(),
    };
    let mut h = encode_rows(spec, x, rows);
    for l in 0..layers {
        let lay = params.layout[l];
        let bias = params.bias(l);
        let mut z = Vec::with_capacity(rows * lay.fan_out);
        for _ in 0..rows {
            z.extend_from_slice(bias);
        }
        gemm_acc(rows, lay.fan_in, lay.fan_out, &h, params.weights(l), &mut z);
        if !z.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite(format!("forward pass, layer {l} pre-activation")));
        }
        if l + 1 == layers {
            if record {
                tape.inputs.push(h);
            }
            tape.output = z;
            break;
        }
        let act = spec.activation;
        if record {
            let mut d = vec![0.0; z.len()];
            act.apply_with_derivative(&mut z, &mut d);
            tape.derivs.push(d);
            tape.inputs.push(std::mem::replace(&mut h, z));
        } else {
            act.apply(&mut z);
            h = z;
        }
    }
    Ok(tape)
}

/// Evaluates the network on every row of `x`, returning `N × output_dim`.
pub fn forward(spec: &NetworkSpec, params: &ParamVector, x: &RealMatrix) -> Result<RealMatrix> {
    check_params(spec, params)?;
    check_dims("forward input columns", spec.input_dim, x.cols())?;
    let n = x.rows();
    let d = spec.input_dim;
    let mut out = Vec::with_capacity(n * spec.output_dim);
    for start in (0..n).step_by(CHUNK_ROWS) {
        let rows = CHUNK_ROWS.min(n - start);
        let tape = forward_chunk(spec, params, &x.as_slice()[start * d..], rows, false)?;
        out.extend_from_slice(&tape.output);
    }
    RealMatrix::from_vec(n, spec.output_dim, out)
}

/// `L(θ) = (1/N) Σᵢ ½‖f(θ, xᵢ) − yᵢ‖²`.
pub fn mse_loss(spec: &NetworkSpec, params: &ParamVector, ts: &TrainingSet) -> Result<f64> {
    ts.check_against(spec)?;
    let out = forward(spec, params, &ts.x)?;
    Ok(half_squared_error_sum(out.as_slice(), ts.y.as_slice(), spec.output_dim) * (1.0 / ts.len() as f64))
}

fn half_squared_error_sum(out: &[f64], y: &[f64], c: usize) -> f64 {
    let mut total = 0.0;
    for (o, t) in out.chunks_exact(c).zip(y.chunks_exact(c)) {
        let mut s = 0.0;
        for (a, b) in o.iter().zip(t) {
            s += (a - b) * (a - b);
        }
        total += 0.5 * s;
    }
    total
}

/// Gradient of [`mse_loss`] with respect to the flat parameter vector.
pub fn loss_gradient(spec: &NetworkSpec, params: &ParamVector, ts: &TrainingSet) -> Result<Vec<f64>> {
    loss_and_gradient(spec, params, ts).map(|(_, g)| g)
}

/// Loss and its gradient from a single forward/backward sweep.
pub fn loss_and_gradient(spec: &NetworkSpec, params: &ParamVector, ts: &TrainingSet) -> Result<(f64, Vec<f64>)> {
    check_params(spec, params)?;
    ts.check_against(spec)?;
    let n = ts.len();
    let d = spec.input_dim;
    let c = spec.output_dim;
    let inv_n = 1.0 / n as f64;
    let layers = params.num_layers();
    let mut grad = vec![0.0; params.len()];
    let weights_t: Vec<Vec<f64>> = (0..layers)
        .map(|l| {
            let lay = params.layout[l];
            let mut t = vec![0.0; lay.weight_len()];
            transpose_into(lay.fan_in, lay.fan_out, params.weights(l), &mut t);
            t
        })
        .collect();
    let mut loss_sum = 0.0;
    for start in (0..n).step_by(CHUNK_ROWS) {
        let rows = CHUNK_ROWS.min(n - start);
        let tape = forward_chunk(spec, params, &ts.x.as_slice()[start * d..], rows, true)?;
        let y = &ts.y.as_slice()[start * c..(start + rows) * c];
        loss_sum += half_squared_error_sum(&tape.output, y, c);

        let mut g: Vec<f64> = tape.output.iter().zip(y).map(|(o, t)| (o - t) * inv_n).collect();
        for l in (0..layers).rev() {
            let lay = params.layout[l];
            gemm_tn_acc(
                lay.fan_in,
                rows,
                lay.fan_out,
                &tape.inputs[l],
                &g,
                &mut grad[lay.weight_offset..lay.bias_offset],
            );
            let gb = &mut grad[lay.bias_offset..lay.end()];
            for row in g.chunks_exact(lay.fan_out) {
                for (b, v) in gb.iter_mut().zip(row) {
                    *b += v;
                }
            }
            if l == 0 {
                break;
            }
            let mut dh = vec![0.0; rows * lay.fan_in];
            gemm_acc(rows, lay.fan_out, lay.fan_in, &g, &weights_t[l], &mut dh);
            for (v, dv) in dh.iter_mut().zip(&tape.derivs[l - 1]) {
                *v *= dv;
            }
            g = dh;
        }
    }
    let loss = loss_sum * inv_n;
    if !loss.is_finite() {
        return Err(Error::NonFinite("loss".into()));
    }
    if let Some(i) = grad.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("loss gradient component {i}")));
    }
    Ok((loss, grad))
}
