use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("codebook error: {0}")]
    Codebook(String),

    #[error("encode error: {0}")]
    Encode(String),

    /// Decoding ran out of input with bits that never matched a codeword.
    /// `decoded` holds everything emitted before the residue.
    #[error("trailing residue of {residue} bit(s) after position {position}")]
    TrailingResidue {
        position: usize,
        residue: usize,
        decoded: Vec<u8>,
    },

    #[error("batch error: {0}")]
    Batch(String),

    #[error("segmentation error: {0}")]
    Segmentation(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("unsupported version: expected `{expected}`, found `{found}`")]
    Version { expected: String, found: String },

    #[error("training diverged at epoch {epoch}: {message}")]
    Training { epoch: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numeric(_) | Error::Training { .. } => 3,
            _ => 2,
        }
    }
}
