//! Fitting coordinate MLPs to signals with quasi-Newton optimizers, and
//! measuring the curvature of their loss landscapes.
//!
//! * [`numerics`]: dense linear algebra, seeded randomness, Jacobi eigensolver.
//! * [`network`]: coordinate MLPs, the MSE loss and its gradients.
//! * [`optimizers`]: Newton, BFGS, L-BFGS, Adam and gradient descent.
//! * [`curvature`]: Hessian-vector products and eigen-spectrum census.
//! * [`tasks`]: image/audio fitting, PSNR and tiled ("kilo") training.

pub mod curvature;
pub mod error;
pub mod network;
pub mod numerics;
pub mod optimizers;
pub mod tasks;

pub use error::{Error, Result};
