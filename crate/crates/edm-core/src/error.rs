//! Error type shared by all core operations.

use alloc::string::String;
use core::fmt;

/// Errors produced by core operations.
///
/// The variants partition failures by kind so callers can map them to
/// distinct exit codes without string matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Tensor or layer shapes do not line up.
    Shape(String),
    /// Input data is invalid (bad label, impossible crop, empty class, ...).
    Data(String),
    /// An operation was called in the wrong order (e.g. backward before forward).
    State(String),
    /// Training produced a non-finite loss.
    Numeric(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape(msg) => write!(f, "shape error: {msg}"),
            Error::Data(msg) => write!(f, "data error: {msg}"),
            Error::State(msg) => write!(f, "state error: {msg}"),
            Error::Numeric(msg) => write!(f, "numeric error: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
