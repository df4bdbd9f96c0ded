use std::path::PathBuf;

/// Errors raised across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument is outside the domain of the operation (non-finite, wrong length, ...).
    #[error("input domain error: {0}")]
    InputDomain(String),

    /// A configuration value is invalid. `field` names the offending entry.
    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    /// The innovation covariance could not be inverted.
    #[error("singular update: {0}")]
    SingularUpdate(String),

    /// A covariance could not be factorised, even after jitter escalation.
    #[error("degenerate covariance: {0}")]
    DegenerateCovariance(String),

    /// Every particle weight vanished.
    #[error("particle weights degenerated at step {step}")]
    Degeneracy { step: usize },

    /// Numerical failure inside a filter (non-finite covariance, etc).
    #[error("internal numerical error: {0}")]
    Numerical(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category, used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InputDomain(_) => "input_domain",
            Error::Config { .. } => "config",
            Error::SingularUpdate(_) => "singular_update",
            Error::DegenerateCovariance(_) => "degenerate_covariance",
            Error::Degeneracy { .. } => "degeneracy",
            Error::Numerical(_) => "numerical",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
