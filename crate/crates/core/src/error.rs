use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("momentum rejection sampler hit {tries} retries on coordinate {coordinate}; softening c is likely mis-set")]
    RejectionCap { coordinate: usize, tries: u64 },

    #[error("chain diverged at iteration {iter}: {detail}")]
    Divergence { iter: u64, detail: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: String,
        line: u64,
        msg: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("series has zero variance")]
    DegenerateVariance,

    #[error("series too short: need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("labels contain a single class")]
    DegenerateLabels,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Failures of the experiment front end, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{path}: {msg}")]
    Parse { path: String, msg: String },

    #[error("invalid experiment: {0}")]
    Validation(String),

    #[error(transparent)]
    Sampler(#[from] SamplerError),

    #[error(transparent)]
    Data(#[from] DataError),

    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("{failed} of {total} chains diverged")]
    Diverged { failed: usize, total: usize },
}

impl ExperimentError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        ExperimentError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 1 for parse or validation problems, 2 for diverged chains, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Diverged { .. }
            | ExperimentError::Sampler(SamplerError::Divergence { .. }) => 2,
            ExperimentError::Io { .. } | ExperimentError::Data(DataError::Io(_)) => 3,
            ExperimentError::Data(DataError::Csv(e)) if e.is_io_error() => 3,
            _ => 1,
        }
    }
}
