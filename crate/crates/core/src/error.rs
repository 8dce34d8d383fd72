//! Crate-wide error type.

use crate::models::ModelKind;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("series is empty")]
    EmptySeries,

    #[error("collision state: spacing {spacing} m is not positive")]
    CollisionState { spacing: f64 },

    #[error("collision during simulation at step {step}: spacing {spacing} m")]
    CollisionAtStep { step: usize, spacing: f64 },

    #[error(
        "gap of {duration_s} s is at or above the short-gap limit of {limit_s} s; \
         use model-based reconstruction"
    )]
    GapRequiresModel { duration_s: f64, limit_s: f64 },

    #[error("gap has no valid context windows and cannot be reconstructed")]
    UnreconstructableGap,

    #[error("cost evaluation failed at sample {index}: {source}")]
    CostEvaluation {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("calibration failed for {model}: every cost evaluation failed")]
    CalibrationFailed { model: ModelKind },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("scan ids are not contiguous: expected {expected}, found {found}")]
    ScanBreak { expected: u64, found: u64 },

    #[error(
        "cannot place {requested} gaps in a series of {series_len} samples \
         after {attempts} attempts ({placed} placed)"
    )]
    GapCapacity {
        requested: usize,
        placed: usize,
        series_len: usize,
        attempts: usize,
    },

    #[error("no usable samples in gap for scoring")]
    NoUsableSamples,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
