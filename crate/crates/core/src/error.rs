use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// Data conditions (a failed check digit, an absent MRZ band) are not errors;
/// they are carried as values or record flags.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid kernel: {0}")]
    Kernel(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("image too small: {0}")]
    Size(String),
    #[error("no text found: {0}")]
    NoText(String),
    #[error("no card found in frame")]
    NoCard,
    #[error("external detector failed: {message}")]
    Adapter { message: String, stderr: String },
    #[error("external detector timed out after {0:?}")]
    Timeout(std::time::Duration),
    #[error("character {0:?} is outside the MRZ alphabet")]
    Alphabet(char),
    #[error("malformed MRZ: {0}")]
    MrzStructure(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("glyph reader: {0}")]
    Reader(String),
    #[error("card spec: {0}")]
    Spec(String),
    #[error("image format: {0}")]
    Format(String),
    #[error("record {0} already present in store")]
    DuplicateId(String),
    #[error("no records to report on")]
    EmptyReport,
    #[error("config: {0}")]
    Config(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Stage name for stage-tagged errors.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
