use thiserror::Error;

/// Errors raised anywhere in the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid excitation: {0}")]
    InvalidExcitation(String),

    #[error("index {index} out of range for {limit} orbitals")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("capability exceeded: {0}")]
    Capability(String),

    #[error("singular fit: {0}")]
    SingularFit(String),

    #[error(
        "eigensolver did not converge after {iterations} iterations \
         (residual {residual:.3e}, best energy {energy:.12})"
    )]
    NotConverged {
        iterations: usize,
        residual: f64,
        energy: f64,
        /// Best Ritz vector reached before giving up.
        vector: Vec<f64>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
