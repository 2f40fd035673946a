use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(&'static str),

    #[error("circulant embedding failed: eigenvalue {eigenvalue:e} below tolerance {tolerance:e}")]
    CirculantEmbeddingFailure { eigenvalue: f64, tolerance: f64 },

    #[error("{what} limit exceeded: requested {requested}, cap is {cap}")]
    CapExceeded {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("sampling method unavailable in this build: {0}")]
    Unsupported(&'static str),

    #[error("parameter outside supported range: {0}")]
    RangeExceeded(&'static str),

    #[error("b = {0} is a non-positive integer (pole)")]
    PoleError(f64),

    #[error("adaptive quadrature exceeded its budget of {intervals} intervals")]
    QuadratureFailure { intervals: usize },

    #[error("degenerate denominator {denominator:e} at step {step}")]
    DegenerateDenominator { step: usize, denominator: f64 },

    #[error("implicit solve failed at step {step} after {iterations} iterations (residual {residual:e})")]
    ImplicitSolveFailure {
        step: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(&'static str),

    #[error("insufficient data: {available} points past burn-in, need {required}")]
    InsufficientData { available: usize, required: usize },

    #[error("path with stream id {stream_id} failed: {source}")]
    PathFailure {
        stream_id: u64,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
}

impl Error {
    /// True for failures caused by the numbers themselves rather than by bad inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::CirculantEmbeddingFailure { .. }
            | Error::QuadratureFailure { .. }
            | Error::DegenerateDenominator { .. }
            | Error::ImplicitSolveFailure { .. } => true,
            Error::PathFailure { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
