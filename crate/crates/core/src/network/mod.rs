//! Coordinate MLPs: architecture, initialization, forward pass, MSE loss,
//! parameter gradients and input-space derivatives.

mod activation;
mod derivs;
mod encoding;
mod model;
mod spec;

pub use activation::{Activation, DEFAULT_OMEGA, DEFAULT_SIGMA};
pub use derivs::{channel_laplacian, output_input_gradient, output_laplacian, LAPLACIAN_STEP};
pub use encoding::{PositionalEncoding, DEFAULT_FREQUENCIES};
pub use model::{forward, loss_and_gradient, loss_gradient, mse_loss};
pub use spec::{init_params, InitScheme, LayerLayout, NetworkSpec, ParamVector, TrainingSet};
