use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter record failed one of its admissibility inequalities.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// An argument is outside the domain where the requested quantity exists.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("root bracketing failed: {0}")]
    Bracketing(String),

    #[error("spectrum too short: {0}")]
    SpectrumTooShort(String),

    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
