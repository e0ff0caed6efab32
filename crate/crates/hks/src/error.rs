use thiserror::Error;

/// Errors surfaced by the library.
///
/// `Validation` covers bad arguments or malformed domain objects, `Parse`
/// and `Io` cover file handling, and `Numerical` covers failures of an
/// internal numerical procedure (e.g. a covariance factorization that does
/// not succeed even at the largest allowed jitter).
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation: {0}")]
    Validation(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("numerical: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
