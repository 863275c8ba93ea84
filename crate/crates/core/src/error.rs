use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite coordinate in point ({0}, {1}, {2})")]
    NonFinitePoint(f64, f64, f64),

    #[error("coordinate {0} m is outside the representable index range")]
    IndexOverflow(f64),

    #[error("invalid map configuration: {0}")]
    InvalidMapConfig(String),

    #[error("invalid pose: {0}")]
    InvalidPose(String),

    #[error("plane fit failed: {0}")]
    PlaneFit(#[from] PlaneFitError),

    #[error("{path}: truncated scan, {len} bytes is not a multiple of 16 (trailing data at byte offset {offset})")]
    TruncatedScan {
        path: PathBuf,
        len: u64,
        offset: u64,
    },

    #[error("{path}:{line}: {message}")]
    PoseFormat {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    LabelFormat { path: PathBuf, message: String },

    #[error("{path}:{line}: {message}")]
    Ply {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("invalid scene: {0}")]
    Scene(String),

    #[error("frame {frame}: {source}")]
    Frame {
        frame: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum PlaneFitError {
    #[error("need at least 3 cubes, got {0}")]
    TooFewCubes(usize),
    #[error("cube set is rank deficient (collinear)")]
    RankDeficient,
    #[error("region has no plane")]
    Missing,
}
