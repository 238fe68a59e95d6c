use std::path::PathBuf;

use thiserror::Error;

use crate::calibration::CalibrationError;
use crate::config::ConfigError;
use crate::frames::FrameError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Config { path: PathBuf, source: ConfigError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Frames { path: PathBuf, source: FrameError },
    #[error("{path}: {source}")]
    Calibration { path: PathBuf, source: CalibrationError },
    #[error("{0}")]
    MissingCalibration(String),
    #[error("{0}")]
    Mismatch(String),
    #[error(transparent)]
    Domain(#[from] uqst_core::Error),
}

impl CliError {
    /// Stable machine-readable category, printed with every failure.
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config { .. } => "config",
            CliError::Io { .. } => "io",
            CliError::Frames { .. } | CliError::Calibration { .. } => "format",
            CliError::MissingCalibration(_) => "missing_calibration",
            CliError::Mismatch(_) => "input_mismatch",
            CliError::Domain(uqst_core::Error::ModeOutOfRange { .. }) => "mode_range",
            CliError::Domain(_) => "domain",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.category() {
            "usage" => 2,
            "config" => 3,
            "io" => 4,
            "format" => 5,
            "missing_calibration" => 6,
            "input_mismatch" => 7,
            "mode_range" => 8,
            _ => 9,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
