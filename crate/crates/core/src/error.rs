use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid arguments: {0}")]
    InvalidArguments(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operator is not hermitian: max |A - A^H| = {residual:.3e} (scale {scale:.3e})")]
    NonHermitian { residual: f64, scale: f64 },

    #[error("operator does not commute with the dipole unitary: max inter-class entry {residual:.3e} (scale {scale:.3e})")]
    NotSymmetric { residual: f64, scale: f64 },

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
