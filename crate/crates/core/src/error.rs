//! Error type shared by all operations in this crate.

use alloc::string::String;
use core::fmt;

/// Errors reported by graph, similarity, model and training operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Two objects that must agree on a dimension do not.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    /// An argument is outside its valid range.
    InvalidArgument(String),
    /// A node index is outside `[0, n)`.
    IndexOutOfRange { index: usize, n: usize },
    /// An operation requires a nonempty collection (edge set, mask, pair set).
    Empty(&'static str),
    /// A class label is outside `[0, num_classes)`.
    LabelOutOfRange { label: usize, num_classes: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch {
                what,
                expected,
                got,
            } => write!(f, "dimension mismatch in {what}: expected {expected}, got {got}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::IndexOutOfRange { index, n } => {
                write!(f, "node index {index} out of range for graph with {n} nodes")
            }
            Error::Empty(what) => write!(f, "{what} must be nonempty"),
            Error::LabelOutOfRange { label, num_classes } => {
                write!(f, "label {label} out of range for {num_classes} classes")
            }
        }
    }
}

impl core::error::Error for Error {}
