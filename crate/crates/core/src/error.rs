use num_complex::Complex64 as C64;
use thiserror::Error;

/// Errors shared across the numerical modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("basis dimension {dim} exceeds cap {cap}")]
    DimensionOverflow { dim: u128, cap: u128 },

    #[error("quadrature did not converge: {context} (tail estimate {tail_estimate:.3e})")]
    QuadratureTail { context: String, tail_estimate: f64 },

    #[error("linear solve near-singular at z = {z}: estimated distance to spectrum {distance:.3e}")]
    NearSingular { z: C64, distance: f64 },

    #[error("linear solve residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    SolveResidual { residual: f64, tol: f64 },

    #[error("eigenvalue tracking ambiguous at g = {g}: candidates {first} and {second} are within 10*tol; rerun with a finer homotopy")]
    TrackingAmbiguity { g: f64, first: C64, second: C64 },

    #[error("quasi-null bilinear norm |v^T v| = {norm:.3e}: eigenpair is numerically defective")]
    DefectivePair { norm: f64 },

    #[error("lemma hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("dense path unavailable for dimension {dim} (cap {cap}); use the sparse shift-invert/Krylov path")]
    DenseCapExceeded { dim: usize, cap: usize },

    #[error("lapack backend failure: {0}")]
    Backend(String),

    #[error("fit failure: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Backend(e.to_string())
    }
}
