use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The exponent sequence violates monotonicity or an admissibility inequality.
    #[error("invalid exponent sequence: {0}")]
    InvalidSequence(String),

    #[error("{what} out of range: {value} not in {lo}..={hi}")]
    OutOfRange {
        what: &'static str,
        value: i64,
        lo: i64,
        hi: i64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    /// Two engines answered the same query differently. Never resolved silently.
    #[error("engine disagreement on {quantity}: bitset={bitset}, symbolic={symbolic}")]
    EngineDisagreement {
        quantity: String,
        bitset: String,
        symbolic: String,
    },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error(
        "basis capacity exceeded: requested k={requested}, but the finite set S admits a \
         doubling subsequence of length at most {capacity}"
    )]
    Capacity { requested: usize, capacity: usize },

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error("no theorem certificate available for k={0}")]
    MissingCertificate(usize),

    #[error("insufficient rows for phi exponent p={p}: need at least {need}, got {got}")]
    InsufficientRows { p: u8, need: usize, got: usize },

    #[error("the scale set S is empty")]
    EmptyBasis,

    #[error("usage error: {0}")]
    Usage(String),

    #[error("I/O error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input in {}: {msg}", path.display())]
    Malformed { path: PathBuf, msg: String },
}

impl Error {
    pub(crate) fn out_of_range(what: &'static str, value: i64, lo: i64, hi: i64) -> Self {
        Error::OutOfRange { what, value, lo, hi }
    }

    /// Process exit status for this error: 2 for validation, 3 for internal
    /// invariant violations, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::EngineDisagreement { .. } | Error::Invariant(_) => 3,
            Error::Io { .. } | Error::Malformed { .. } => 4,
            _ => 2,
        }
    }
}
