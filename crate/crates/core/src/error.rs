use thiserror::Error;

use crate::geometry::Point2;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A point, value or geometry lies outside where an operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("point {point} is outside the valid region: {reason}")]
    OutOfDomain { point: Point2, reason: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// An object was used before a required build step, e.g. an energy cost
    /// model before its density table exists.
    #[error("invalid state: {0}")]
    State(String),

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("destination unreachable: {0}")]
    Unreachable(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error("{label}: {source}")]
    Context {
        label: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Attach a label, such as the name of the artifact being produced.
    pub fn context(self, label: impl Into<String>) -> Self {
        Error::Context {
            label: label.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, with all context layers stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for failures caused by bad numeric input or a solver that did
    /// not converge, as opposed to configuration or I/O problems.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self.root(),
            Error::Domain(_)
                | Error::OutOfDomain { .. }
                | Error::State(_)
                | Error::Convergence(_)
                | Error::Unreachable(_)
        )
    }
}

pub trait ResultExt<T> {
    fn context(self, label: impl Into<String>) -> Result<T>;
}

impl<T> ResultExt<T> for Result<T> {
    fn context(self, label: impl Into<String>) -> Result<T> {
        self.map_err(|e| e.context(label))
    }
}
