use thiserror::Error;

/// Errors raised by the numerical engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Shapes of the operands do not line up.
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    /// An input or configuration violated a precondition.
    #[error("rejected: {0}")]
    Rejected(String),

    /// The requested problem exceeds the desk-scale size limit of an operation.
    #[error("{what} has {size} parameters, above the cap of {cap}")]
    OverCap {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    /// The Jacobi eigensolver did not reach its tolerance in the sweep budget.
    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    /// A NaN or infinity appeared in a computed quantity.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// A linear system could not be solved, even after regularization.
    #[error("singular system: {0}")]
    Singular(String),

    /// The line search could not produce an acceptable step.
    #[error("line search failed: {0}")]
    LineSearch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dims(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension {
            context,
            expected,
            found,
        })
    }
}
