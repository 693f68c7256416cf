use std::io;
use std::path::PathBuf;

use tcgx_core::codec::FormatError;
use tcgx_core::profile::{CommandId, ProfileError};
use tcgx_core::signature::EmptyKeyRing;
use tcgx_core::{DrawingError, Violation};

/// Every failure the CLI and the service report. `exit_code` and
/// `http_status` give the two interface mappings of one classification.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {source}", path.display())]
    Format {
        path: PathBuf,
        #[source]
        source: FormatError,
    },
    #[error("invalid params: {}", join(.0))]
    InvalidParams(Vec<Violation>),
    #[error(transparent)]
    Drawing(DrawingError),
    #[error("command not in profile: {command} is not available in profile {profile:?}")]
    NotInProfile { command: CommandId, profile: String },
    #[error("unknown profile {0:?}")]
    UnknownProfile(String),
    #[error("{what} {id:?} not found")]
    NotFound { what: &'static str, id: String },
    #[error("{what} {id:?} exists")]
    Exists { what: &'static str, id: String },
    #[error("invalid prototype {id:?}: {reason}")]
    InvalidPrototype { id: String, reason: String },
    #[error("signing requires a key ring: {0}")]
    EmptyKeyRing(#[from] EmptyKeyRing),
    #[error("no key ring directory configured (use --keyring or TCGX_KEYRING)")]
    NoKeyRing,
    #[error("profile config {}: {reason}", path.display())]
    Config { path: PathBuf, reason: String },
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("{0}")]
    Usage(String),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

impl From<DrawingError> for Error {
    fn from(e: DrawingError) -> Self {
        match e {
            DrawingError::InvalidParams(v) => Error::InvalidParams(v),
            other => Error::Drawing(other),
        }
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, source: FormatError) -> Self {
        Error::Format {
            path: path.into(),
            source,
        }
    }

    /// 1 for domain errors, 2 for usage errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::UnknownProfile(_) => 2,
            _ => 1,
        }
    }

    /// Machine-readable error code used by the service.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Format { .. } => "format",
            Error::InvalidParams(_) => "invalid_params",
            Error::Drawing(DrawingError::NotFound(_)) => "not_found",
            Error::Drawing(_) => "invalid_operation",
            Error::NotInProfile { .. } => "command_not_in_profile",
            Error::UnknownProfile(_) => "unknown_profile",
            Error::NotFound { .. } => "not_found",
            Error::Exists { .. } => "exists",
            Error::InvalidPrototype { .. } => "invalid_prototype",
            Error::EmptyKeyRing(_) | Error::NoKeyRing => "empty_keyring",
            Error::Config { .. } | Error::Profile(_) => "config",
            Error::Usage(_) => "bad_request",
        }
    }

    pub fn http_status(&self) -> u16 {
        match self {
            Error::Io { .. } | Error::Config { .. } | Error::Profile(_) => 500,
            // a stored drawing that does not parse is a server-side problem
            Error::Format { .. } => 500,
            Error::Drawing(DrawingError::NotFound(_)) | Error::NotFound { .. } => 404,
            Error::NotInProfile { .. } | Error::Exists { .. } => 409,
            Error::InvalidPrototype { .. } => 500,
            _ => 400,
        }
    }

    pub fn violations(&self) -> Option<&[Violation]> {
        match self {
            Error::InvalidParams(v) => Some(v),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
