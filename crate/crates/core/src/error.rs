use thiserror::Error;

/// Errors raised by the construction and verification routines.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is singular (|det| = {det:e} <= tolerance {tolerance:e})")]
    SingularMatrix { det: f64, tolerance: f64 },

    #[error("out of range: {0}")]
    OutOfRange(String),

    /// A construction was refused because a hypothesis it relies on does not hold.
    #[error("refused: {0}")]
    Refused(String),

    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error_bound:e}")]
    Quadrature { estimate: f64, error_bound: f64 },

    #[error("invariant violated: {0}")]
    InvariantViolated(String),
}

pub type Result<T> = std::result::Result<T, Error>;
