//! The objective abstraction optimizers minimize, and its network instance.

use crate::curvature;
use crate::error::{Error, Result};
use crate::network::{loss_and_gradient, mse_loss, NetworkSpec, ParamVector, TrainingSet};
use crate::numerics::RealMatrix;

/// A smooth scalar function of a flat parameter vector.
pub trait Objective {
    fn dim(&self) -> usize;

    fn value(&self, theta: &[f64]) -> Result<f64> {
        self.value_and_gradient(theta).map(|(f, _)| f)
    }

    fn value_and_gradient(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)>;

    /// Dense Hessian, for Newton's method. Not every objective provides one.
    fn hessian(&self, _theta: &[f64]) -> Result<RealMatrix> {
        Err(Error::Rejected("objective does not provide a Hessian".into()))
    }
}

/// MSE loss of a coordinate MLP on a fixed training set.
#[derive(Debug, Clone, Copy)]
pub struct NetworkObjective<'a> {
    pub spec: &'a NetworkSpec,
    pub data: &'a TrainingSet,
}

impl<'a> NetworkObjective<'a> {
    pub fn new(spec: &'a NetworkSpec, data: &'a TrainingSet) -> Result<Self> {
        spec.validate()?;
        data.check_against(spec)?;
        Ok(Self { spec, data })
    }

    fn params(&self, theta: &[f64]) -> Result<ParamVector> {
        ParamVector::from_flat(self.spec, theta.to_vec())
    }
}

impl Objective for NetworkObjective<'_> {
    fn dim(&self) -> usize {
        self.spec.param_count()
    }

    fn value(&self, theta: &[f64]) -> Result<f64> {
        mse_loss(self.spec, &self.params(theta)?, self.data)
    }

    fn value_and_gradient(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        loss_and_gradient(self.spec, &self.params(theta)?, self.data)
    }

    fn hessian(&self, theta: &[f64]) -> Result<RealMatrix> {
        curvature::full_hessian(self.spec, &self.params(theta)?, self.data).map(|h| h.matrix)
    }
}
