use thiserror::Error;

/// Errors raised by the grid, operator, norm and solver layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KfpError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid operator parameters: {0}")]
    InvalidParams(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Krylov solve did not converge in {iterations} iterations (relative residual {residual:e})")]
    KrylovDiverged { iterations: usize, residual: f64 },

    #[error("non-finite state at step {step} (t = {t})")]
    NonFinite { step: usize, t: f64 },

    #[error("dense oracle limited to {limit} points, grid has {points}")]
    OracleTooLarge { limit: usize, points: usize },

    #[error("outside the theorem range: {0}")]
    OutsideTheoremRange(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, KfpError>;
