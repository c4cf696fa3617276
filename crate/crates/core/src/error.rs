use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("field modulus {0} outside the supported range [5, 2^62)")]
    ModulusOutOfRange(u64),
    #[error("inverse of zero requested")]
    ZeroInverse,
    #[error("prime {0} is below 5; characteristics 2 and 3 are excluded")]
    SmallPrime(u64),
    #[error("curve has bad reduction at p = {0}")]
    BadReduction(u64),
    #[error("singular model: discriminant is zero")]
    SingularCurve,
    #[error("Hasse bound violated: a = {a}, q = {q}")]
    HasseViolation { a: i64, q: u64 },
    #[error("integer overflow: {0}")]
    Overflow(String),
    #[error("{ell} does not divide the group order {order}")]
    NotDivisible { ell: u64, order: u64 },
    #[error("ell = {ell} out of range for {model}")]
    EllOutOfRange { ell: u64, model: &'static str },
    #[error("enumeration too large: {0}")]
    SizeLimit(String),
    #[error("empty sample: no good primes in range")]
    EmptySample,
    #[error("curve {0} has complex multiplication; the model must be forced explicitly")]
    CmRefused(String),
    #[error("line {line}: {msg}")]
    MalformedLine { line: usize, msg: String },
    #[error("duplicate curve label {0:?}")]
    DuplicateLabel(String),
    #[error("unknown curve label {0:?}")]
    UnknownCurve(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt cache file: {0}")]
    CorruptCache(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures that indicate a bug rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Invariant(_) | Error::CorruptCache(_))
    }
}
