use thiserror::Error;

/// Errors raised by the library. Numeric payloads are carried as `f64`
/// regardless of the scalar type in use.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid cross-section: {0}")]
    InvalidGeometry(String),

    #[error("query at x1 = {x} outside the sampled window [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },

    #[error("value {alpha} outside the range of the {branch} branch ({detail})")]
    Domain {
        branch: &'static str,
        alpha: f64,
        detail: String,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("constant policy: {0}")]
    Policy(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mask is empty: {0}")]
    EmptyMask(String),

    #[error("eigensolver did not converge after {iterations} iterations ({converged} of {wanted} pairs converged)")]
    NonConvergence {
        iterations: usize,
        converged: usize,
        wanted: usize,
        /// Eigenvalues that did converge, ascending.
        partial: Vec<f64>,
    },

    #[error("spectrum is only complete below {cutoff}, but lambda = {lambda} was requested")]
    Incomplete { cutoff: f64, lambda: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
