use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::network::{Activation, PositionalEncoding};
use crate::numerics::{RealMatrix, RngStream};

/// How initial weights are drawn. Biases always start at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitScheme {
    /// Activation-dependent uniform ranges:
    /// sine uses `±1/fan_in` on the first layer and `±√(6/fan_in)/(2πω)` after
    /// it, so hidden pre-activations `2πω·z` stay within `±√(6/fan_in)`;
    /// every other activation uses `±√(6/fan_in)`.
    #[default]
    Standard,
    /// As `Standard`, but later sine layers use `±√(6/fan_in)/ω`.
    PerOmega,
    /// All parameters zero.
    Zero,
}

/// Architecture of a coordinate MLP.
///
/// Layers are `T_L ∘ ψ ∘ … ∘ ψ ∘ T_1 ∘ γ`: one affine map per hidden width
/// plus a final affine map with no activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub hidden_widths: Vec<usize>,
    pub activation: Activation,
    #[serde(default)]
    pub encoding: PositionalEncoding,
    #[serde(default)]
    pub init: InitScheme,
    pub seed: u64,
}

impl NetworkSpec {
    pub fn new(input_dim: usize, hidden_widths: Vec<usize>, output_dim: usize, activation: Activation) -> Self {
        Self {
            input_dim,
            output_dim,
            hidden_widths,
            activation,
            encoding: PositionalEncoding::disabled(),
            init: InitScheme::Standard,
            seed: 0,
        }
    }

    pub fn with_encoding(mut self, encoding: PositionalEncoding) -> Self {
        self.encoding = encoding;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_init(mut self, init: InitScheme) -> Self {
        self.init = init;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::Rejected("input and output dimensions must be positive".into()));
        }
        if let Some(i) = self.hidden_widths.iter().position(|&w| w == 0) {
            return Err(Error::Rejected(format!("hidden layer {i} has zero width")));
        }
        self.activation.validate()?;
        self.encoding.validate()
    }

    /// Width of the first affine map's input (after encoding).
    pub fn encoded_dim(&self) -> usize {
        self.encoding.output_dim(self.input_dim)
    }

    /// `(fan_in, fan_out)` of each affine map, first to last.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut widths = vec![self.encoded_dim()];
        widths.extend_from_slice(&self.hidden_widths);
        widths.push(self.output_dim);
        widths.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims().iter().map(|(i, o)| i * o + o).sum()
    }

    pub fn layout(&self) -> Vec<LayerLayout> {
        let mut offset = 0;
        self.layer_dims()
            .into_iter()
            .map(|(fan_in, fan_out)| {
                let l = LayerLayout {
                    weight_offset: offset,
                    fan_in,
                    fan_out,
                    bias_offset: offset + fan_in * fan_out,
                };
                offset += fan_in * fan_out + fan_out;
                l
            })
            .collect()
    }

    /// Half-width of the uniform distribution for the weights of `layer`.
    pub fn init_bound(&self, layer: usize) -> f64 {
        let (fan_in, _) = self.layer_dims()[layer];
        let fan_in = fan_in as f64;
        match (self.init, self.activation) {
            (InitScheme::Zero, _) => 0.0,
            (_, Activation::Sine { .. }) if layer == 0 => 1.0 / fan_in,
            (InitScheme::Standard, Activation::Sine { omega }) => (6.0 / fan_in).sqrt() / (TAU * omega),
            (InitScheme::PerOmega, Activation::Sine { omega }) => (6.0 / fan_in).sqrt() / omega,
            (_, _) => (6.0 / fan_in).sqrt(),
        }
    }
}

/// Where one affine layer lives inside the flat parameter vector.
///
/// The weight block is `fan_in × fan_out`, row-major, so a row of inputs
/// times the block gives the layer's pre-activations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerLayout {
    pub weight_offset: usize,
    pub fan_in: usize,
    pub fan_out: usize,
    pub bias_offset: usize,
}

impl LayerLayout {
    pub fn weight_len(&self) -> usize {
        self.fan_in * self.fan_out
    }

    pub fn end(&self) -> usize {
        self.bias_offset + self.fan_out
    }
}

/// Flat vector of all weights and biases, with the per-layer layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    pub flat: Vec<f64>,
    pub layout: Vec<LayerLayout>,
}

impl ParamVector {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        Self {
            flat: vec![0.0; spec.param_count()],
            layout: spec.layout(),
        }
    }

    pub fn from_flat(spec: &NetworkSpec, flat: Vec<f64>) -> Result<Self> {
        check_dims("ParamVector::from_flat", spec.param_count(), flat.len())?;
        Ok(Self {
            flat,
            layout: spec.layout(),
        })
    }

    pub fn len(&self) -> usize {
        self.flat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn num_layers(&self) -> usize {
        self.layout.len()
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        let l = &self.layout[layer];
        &self.flat[l.weight_offset..l.bias_offset]
    }

    pub fn weights_mut(&mut self, layer: usize) -> &mut [f64] {
        let l = self.layout[layer];
        &mut self.flat[l.weight_offset..l.bias_offset]
    }

    pub fn bias(&self, layer: usize) -> &[f64] {
        let l = &self.layout[layer];
        &self.flat[l.bias_offset..l.end()]
    }

    pub fn bias_mut(&mut self, layer: usize) -> &mut [f64] {
        let l = self.layout[layer];
        &mut self.flat[l.bias_offset..l.end()]
    }

    /// Per-layer `(A, b)` copies.
    pub fn unflatten(&self) -> Vec<(RealMatrix, Vec<f64>)> {
        (0..self.num_layers())
            .map(|i| {
                let l = &self.layout[i];
                let a = RealMatrix::from_vec(l.fan_in, l.fan_out, self.weights(i).to_vec())
                    .expect("layout is consistent");
                (a, self.bias(i).to_vec())
            })
            .collect()
    }

    pub fn flatten(spec: &NetworkSpec, layers: &[(RealMatrix, Vec<f64>)]) -> Result<Self> {
        let layout = spec.layout();
        check_dims("ParamVector::flatten layers", layout.len(), layers.len())?;
        let mut flat = Vec::with_capacity(spec.param_count());
        for (l, (a, b)) in layout.iter().zip(layers) {
            check_dims("ParamVector::flatten rows", l.fan_in, a.rows())?;
            check_dims("ParamVector::flatten cols", l.fan_out, a.cols())?;
            check_dims("ParamVector::flatten bias", l.fan_out, b.len())?;
            flat.extend_from_slice(a.as_slice());
            flat.extend_from_slice(b);
        }
        Ok(Self { flat, layout })
    }
}

/// Draws initial parameters. Layers are filled in order, weights row-major.
pub fn init_params(spec: &NetworkSpec) -> Result<ParamVector> {
    spec.validate()?;
    let mut params = ParamVector::zeros(spec);
    if spec.init == InitScheme::Zero {
        return Ok(params);
    }
    let mut rng = RngStream::new(spec.seed);
    for layer in 0..params.num_layers() {
        let bound = spec.init_bound(layer);
        for w in params.weights_mut(layer) {
            *w = rng.uniform(-bound, bound)?;
        }
    }
    Ok(params)
}

/// Full-batch training data: `x` is N×d coordinates, `y` is N×c targets.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub x: RealMatrix,
    pub y: RealMatrix,
}

impl TrainingSet {
    pub fn new(x: RealMatrix, y: RealMatrix) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::Rejected("training set needs at least one sample".into()));
        }
        check_dims("TrainingSet rows", x.rows(), y.rows())?;
        if !x.all_finite() || !y.all_finite() {
            return Err(Error::NonFinite("training set".into()));
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.x.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.y.cols()
    }

    pub fn check_against(&self, spec: &NetworkSpec) -> Result<()> {
        check_dims("training inputs vs network input_dim", spec.input_dim, self.input_dim())?;
        check_dims("training targets vs network output_dim", spec.output_dim, self.output_dim())
    }
}
