use std::path::PathBuf;

/// Errors produced by the library.
///
/// Every fallible operation reports enough context to identify the call
/// site from the message alone: the operation name, the offending shapes
/// or values, and for I/O the path involved.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Two operands have shapes the operation cannot combine.
    #[error("{op}: incompatible shapes {left_rows}x{left_cols} and {right_rows}x{right_cols}")]
    ShapeMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    /// A buffer length does not match the shape it is supposed to fill.
    #[error("{op}: expected {expected} elements for a {rows}x{cols} matrix, got {got}")]
    LengthMismatch {
        op: &'static str,
        rows: usize,
        cols: usize,
        expected: usize,
        got: usize,
    },

    /// An operation that requires finite input met a NaN or infinity.
    #[error("{op}: non-finite value {value} at row {row}, col {col}")]
    NonFinite {
        op: &'static str,
        row: usize,
        col: usize,
        value: f64,
    },

    /// A scalar or structural argument is outside its documented domain.
    #[error("{op}: {reason}")]
    InvalidArgument { op: &'static str, reason: String },

    /// A token id falls outside the embedding table.
    #[error("embed: token id {id} out of range for vocabulary of size {vocab_size}")]
    TokenOutOfRange { id: usize, vocab_size: usize },

    /// An input sequence is longer than the learned position table.
    #[error("embed: sequence length {len} exceeds max_len {max_len}")]
    SequenceTooLong { len: usize, max_len: usize },

    /// A benchmark case was skipped because its predicted working set is
    /// larger than the harness allows.
    #[error("{case}: predicted working set of {predicted_floats} floats exceeds the cap of {cap_floats}")]
    WorkingSetTooLarge {
        case: String,
        predicted_floats: u64,
        cap_floats: u64,
    },

    /// Reading or writing a file failed.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape_mismatch(op: &'static str, a: (usize, usize), b: (usize, usize)) -> Self {
        Error::ShapeMismatch {
            op,
            left_rows: a.0,
            left_cols: a.1,
            right_rows: b.0,
            right_cols: b.1,
        }
    }

    pub(crate) fn invalid(op: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            op,
            reason: reason.into(),
        }
    }
}
