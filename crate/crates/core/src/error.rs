use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid filter or tree configuration (window size, rank, bit depth).
    #[error("configuration error: {0}")]
    Config(String),

    /// A value or argument outside its admissible range.
    #[error("input error: {0}")]
    Input(String),

    /// A query that cannot be answered in the current state, e.g. selecting from an empty tree.
    #[error("query error: {0}")]
    Query(String),

    /// Internal consistency violation, e.g. removing a value that is not stored.
    #[error("logic error: {0}")]
    Logic(String),

    #[error("malformed image data at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn format(offset: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: msg.into(),
        }
    }
}
