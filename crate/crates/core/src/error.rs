use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// One failed attempt against an external service.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttemptRecord {
    pub attempt: u32,
    pub outcome: String,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid asset: {0}")]
    InvalidAsset(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("unsatisfiable sampling: {0}")]
    UnsatisfiableSampling(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("backend error after {} attempt(s): {message}", attempts.len())]
    Backend {
        message: String,
        attempts: Vec<AttemptRecord>,
    },

    #[error("request rejected with HTTP {status}: {body}")]
    Request { status: u16, body: String },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("split error on {axis} axis: {detail}")]
    Split { axis: SplitAxis, detail: String },

    #[error("eval error: {0}")]
    Eval(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("image: {0}")]
    Image(#[from] image::ImageError),
}

/// The four disjointness axes checked when splitting a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitAxis {
    Species,
    Pose,
    CameraSetting,
    Scenery,
    Size,
}

impl std::fmt::Display for SplitAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SplitAxis::Species => "species",
            SplitAxis::Pose => "pose",
            SplitAxis::CameraSetting => "camera-setting",
            SplitAxis::Scenery => "scenery",
            SplitAxis::Size => "test-size",
        };
        f.write_str(s)
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that stem from configuration or startup inputs.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
