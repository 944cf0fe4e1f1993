//! Curvature of the training loss: Hessian-vector products, dense Hessians
//! and their eigenvalue census.

pub mod hessian;
pub mod spectrum;

pub use hessian::{
    full_hessian, full_hessian_objective, hvp, hvp_objective, hvp_step, HessianReport, HESSIAN_MAX_PARAMS,
    SMOOTH_ASYMMETRY_LIMIT,
};
pub use spectrum::{
    spectrum, spectrum_trace, Histogram, SpectrumConfig, SpectrumReport, SpectrumTrace, DEFAULT_BINS, DEFAULT_WINDOW,
    DEFAULT_ZERO_TOL,
};
