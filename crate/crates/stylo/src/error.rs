use std::path::PathBuf;

use crate::model_io::ModelFileError;

#[derive(Debug, thiserror::Error)]
pub enum StyloError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}: no such file")]
    MissingFile(PathBuf),
    #[error("malformed config: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Model(#[from] ModelFileError),
    #[error(transparent)]
    Core(#[from] stylo_core::Error),
    #[error("{0}")]
    Usage(String),
}

/// Stable classification used for exit codes and error lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Failure,
    Usage,
    MissingFile,
    Config,
    ModelFormat,
    ModelVersion,
    ModelTruncated,
    ModelChecksum,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Failure => 1,
            ErrorKind::Usage => 2,
            ErrorKind::MissingFile => 3,
            ErrorKind::Config => 4,
            ErrorKind::ModelFormat => 5,
            ErrorKind::ModelVersion => 6,
            ErrorKind::ModelTruncated => 7,
            ErrorKind::ModelChecksum => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::Failure => "failure",
            ErrorKind::Usage => "usage",
            ErrorKind::MissingFile => "missing_file",
            ErrorKind::Config => "config",
            ErrorKind::ModelFormat => "model_format",
            ErrorKind::ModelVersion => "model_version",
            ErrorKind::ModelTruncated => "model_truncated",
            ErrorKind::ModelChecksum => "model_checksum",
        }
    }
}

impl StyloError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            StyloError::MissingFile(path)
        } else {
            StyloError::Io { path, source }
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            StyloError::MissingFile(_) => ErrorKind::MissingFile,
            StyloError::Config(_) => ErrorKind::Config,
            StyloError::Core(stylo_core::Error::InvalidConfig(_)) => ErrorKind::Config,
            StyloError::Usage(_) => ErrorKind::Usage,
            StyloError::Model(e) => match e {
                ModelFileError::Version { .. } => ErrorKind::ModelVersion,
                ModelFileError::Truncated => ErrorKind::ModelTruncated,
                ModelFileError::Checksum { .. } => ErrorKind::ModelChecksum,
                ModelFileError::Io(_) => ErrorKind::Failure,
                _ => ErrorKind::ModelFormat,
            },
            _ => ErrorKind::Failure,
        }
    }
}
