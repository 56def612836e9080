use thiserror::Error;

use crate::transcribe::DiscreteSolution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("Newton iteration for Legendre root {index} of degree {degree} did not converge")]
    RootFinding { degree: usize, index: usize },

    #[error("matrix is singular to working precision ({context})")]
    SingularMatrix { context: String },

    #[error("non-finite value from {callback} at collocation index {index}")]
    NonFinite {
        callback: &'static str,
        index: usize,
    },

    /// The Newton budget ran out. `best` holds the iterate with the smallest
    /// residual seen so far.
    #[error(
        "Newton iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NonConvergence {
        iterations: usize,
        residual: f64,
        best: Box<DiscreteSolution>,
    },

    /// The Newton matrix lost rank at the current iterate.
    #[error("singular Jacobian at iteration {iterations} (residual {residual:e})")]
    SingularJacobian {
        iterations: usize,
        residual: f64,
        iterate: Box<DiscreteSolution>,
    },
}
