//! Pipeline harness: configuration, measurement and checkpoint files,
//! experiment drivers and result emission.

pub mod checkpoint;
pub mod config;
pub mod measurements;
pub mod output;
pub mod pipeline;

use std::path::{Path, PathBuf};

pub use checkpoint::Checkpoint;
pub use config::{RunArgs, RunConfig};
pub use pipeline::{pec_scan, prefix_series, run_pipeline, PecPoint, PipelineOutput, SeriesPoint};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("configuration: {0}")]
    Config(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Core(#[from] qsci_core::Error),
}

impl HarnessError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Core(_) => 1,
            HarnessError::Parse { .. } | HarnessError::Config(_) => 2,
            HarnessError::Io { .. } => 3,
            HarnessError::Checkpoint(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Io { .. } => "io",
            HarnessError::Parse { .. } => "parse",
            HarnessError::Config(_) => "config",
            HarnessError::Checkpoint(_) => "checkpoint",
            HarnessError::Core(e) => match e {
                qsci_core::Error::Capability(_) => "capability",
                qsci_core::Error::NotConverged { .. } => "not_converged",
                qsci_core::Error::SingularFit(_) => "singular_fit",
                _ => "module",
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Wrap an I/O error with the path it concerns.
pub fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

/// Read and parse an FCIDUMP file.
pub fn load_fcidump(path: &Path) -> Result<qsci_core::IntegralStore> {
    let text = std::fs::read_to_string(path).map_err(io_error(path))?;
    qsci_core::integrals::parse_fcidump(&text).map_err(|e| match e {
        qsci_core::Error::Parse { line, message } => {
            HarnessError::Parse { path: path.to_path_buf(), line, message }
        }
        other => HarnessError::Core(other),
    })
}
