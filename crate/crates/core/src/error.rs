use thiserror::Error;

/// Errors produced anywhere in the reconstruction toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("contour too small: {0} point(s)")]
    ContourTooSmall(usize),
    #[error("component has no foreground pixels")]
    EmptyComponent,
    #[error("hard resolution failed: {0}")]
    ResolutionFailed(String),
    #[error("densification rejected: {0}")]
    DensifyRejected(String),
    #[error("unsupported path command '{0}'")]
    UnsupportedCommand(char),
    #[error("malformed path data: {0}")]
    MalformedPath(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("image has no components")]
    NoComponents,
    #[error("input has {0} components, expected exactly one")]
    MultipleComponents(usize),
    #[error("perturbation rejected after {0} attempts")]
    PerturbFailed(usize),
    #[error("config line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
