use std::path::PathBuf;

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension error: {op} got {left:?} and {right:?}")]
    Shape {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },
    /// A CSV row failed validation. `row` is 1-based and excludes the header.
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization error: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Reads a user-supplied file; failure is an input error.
    pub(crate) fn read_input(path: &std::path::Path) -> Result<String> {
        std::fs::read_to_string(path).map_err(|e| Error::Data {
            path: path.to_path_buf(),
            message: format!("cannot read: {e}"),
        })
    }

    /// True for bad input (files, arguments, schemas) as opposed to failures that
    /// happen while computing.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_) | Error::Data { .. } | Error::Row { .. } | Error::Serde(_)
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
