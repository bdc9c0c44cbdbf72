use std::io;

use thiserror::Error;

use crate::channel::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(
        "truncated stream{}: needed {needed} samples, only {available} available",
        snapshot.map(|s| format!(" at snapshot {s}")).unwrap_or_default()
    )]
    TruncatedStream {
        needed: usize,
        available: usize,
        snapshot: Option<usize>,
    },

    #[error("scheduling: {0}")]
    Scheduling(String),

    #[error("degenerate waveform: occupied bin {bin} has magnitude {magnitude:e}")]
    DegenerateWaveform { bin: usize, magnitude: f64 },

    #[error("sounder parameters rejected for this channel:\n{0}")]
    Validation(ValidationReport),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Coarse error class, used for process exit codes and machine-readable
/// error prefixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Validation,
    Io,
    Format,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Config => "config",
            ErrorCategory::Validation => "validation",
            ErrorCategory::Io => "io",
            ErrorCategory::Format => "format",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 2,
            ErrorCategory::Validation => 3,
            ErrorCategory::Io => 4,
            ErrorCategory::Format => 5,
        }
    }
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_)
            | Error::TruncatedStream { .. }
            | Error::Scheduling(_)
            | Error::DegenerateWaveform { .. } => ErrorCategory::Config,
            Error::Validation(_) => ErrorCategory::Validation,
            Error::Format(_) => ErrorCategory::Format,
            Error::Io(_) => ErrorCategory::Io,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
