use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian: |M - M^H|_F = {residual:e} (|M|_F = {norm:e})")]
    NotHermitian { residual: f64, norm: f64 },

    #[error("Hermitian eigensolver did not converge for dimension {dim}")]
    NoConvergence { dim: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operators do not commute: |[A, B]|_F = {residual:e}")]
    NonCommuting { residual: f64 },

    #[error("matrix is not unitary: |U^H U - 1|_F = {residual:e}")]
    NotUnitary { residual: f64 },

    #[error("ratio undefined: |chi(u)| = {magnitude:e} is below {threshold:e}")]
    UndefinedRatio { magnitude: f64, threshold: f64 },

    #[error("internal trace drift {drift:e} exceeds {limit:e}")]
    TraceDrift { drift: f64, limit: f64 },

    #[error("work distribution is not normalized: sum of probabilities = {sum}")]
    Unnormalized { sum: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
