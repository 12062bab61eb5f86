use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("duplicate accession `{0}`")]
    DuplicateAccession(String),

    #[error("relationship {source_id} -> {target_id} references unknown concept `{missing}`")]
    DanglingRelationship {
        source_id: String,
        target_id: String,
        missing: String,
    },

    #[error("invalid ontology: {0}")]
    Validation(String),

    #[error("unknown accession `{0}`")]
    UnknownAccession(String),

    #[error("ontology id mismatch: `{old}` vs `{new}`")]
    OntologyMismatch { old: String, new: String },

    #[error("cannot apply change: {0}")]
    Apply(String),

    #[error("matcher configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("invalid matcher configuration: {0}")]
    InvalidConfig(String),

    #[error("prediction error: {0}")]
    Prediction(String),

    #[error("insufficient history: {0}")]
    InsufficientHistory(String),

    #[error("malformed {what}: {message}")]
    Format { what: &'static str, message: String },

    #[error("unknown report format `{0}`")]
    UnknownFormat(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("{stage} stage failed on {input}: {source}")]
    Stage {
        stage: &'static str,
        input: String,
        #[source]
        source: Box<Error>,
    },
}

/// Coarse grouping used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad flags or configuration.
    Usage,
    /// Unreadable, malformed or inconsistent input data.
    Data,
    /// A broken internal invariant.
    Internal,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidConfig(_) | Error::ConfigMismatch(_) | Error::UnknownFormat(_) => {
                ErrorClass::Usage
            }
            Error::Apply(_) => ErrorClass::Internal,
            Error::Stage { source, .. } => source.class(),
            _ => ErrorClass::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(what: &'static str, message: impl Into<String>) -> Self {
        Error::Format {
            what,
            message: message.into(),
        }
    }
}
