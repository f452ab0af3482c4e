//! Crate-wide error type.

use std::fmt;
use std::path::PathBuf;

/// Errors produced by tracking, verification and benchmark components.
#[derive(Debug)]
pub enum Error {
    /// Grid or channel dimensions do not agree.
    ShapeMismatch {
        expected: (usize, usize, usize),
        actual: (usize, usize, usize),
    },
    /// A patch is smaller than a single feature cell.
    PatchTooSmall {
        patch: (usize, usize),
        cell_size: usize,
    },
    /// Filter response denominator contains an exact zero bin with no regularizer.
    SingularDenominator,
    /// A configuration value violates its invariant.
    InvalidConfig(String),
    /// Sequence data on disk is missing or malformed.
    Sequence {
        path: PathBuf,
        line: Option<usize>,
        message: String,
    },
    /// A sequence was handed to the engine without the data it needs.
    EmptySequence,
    /// The two workers exchanged an inconsistent message.
    Protocol(String),
    /// Underlying I/O failure.
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch { expected, actual } => write!(
                f,
                "shape mismatch: expected {}x{}x{}, got {}x{}x{}",
                expected.0, expected.1, expected.2, actual.0, actual.1, actual.2
            ),
            Error::PatchTooSmall { patch, cell_size } => write!(
                f,
                "patch {}x{} is smaller than one {}x{} cell",
                patch.0, patch.1, cell_size, cell_size
            ),
            Error::SingularDenominator => {
                write!(f, "response denominator has a zero bin and lambda = 0")
            }
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Sequence {
                path,
                line,
                message,
            } => match line {
                Some(n) => write!(f, "{}:{}: {}", path.display(), n, message),
                None => write!(f, "{}: {}", path.display(), message),
            },
            Error::EmptySequence => write!(f, "sequence has no frames"),
            Error::Protocol(msg) => write!(f, "protocol error: {msg}"),
            Error::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
