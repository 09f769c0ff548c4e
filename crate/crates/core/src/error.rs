use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed encoding: {0}")]
    Encoding(String),

    #[error("receiver set of {size} exceeds partition capacity {capacity}")]
    Capacity { size: usize, capacity: usize },

    #[error("identity {0:?} appears more than once")]
    DuplicateId(String),

    #[error("{0:?} is not a member")]
    NotMember(String),

    #[error("{0:?} is already a member")]
    AlreadyMember(String),

    #[error("identity {0:?} hashes to a degenerate value under the master secret")]
    Degenerate(String),

    #[error("{bases} bases but {exponents} exponents")]
    LengthMismatch { bases: usize, exponents: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// AEAD tag mismatch: wrong key, stale metadata or tampering.
    #[error("authentication failed")]
    Authentication,

    /// Sealed blob or signed package failed its integrity check.
    #[error("integrity check failed")]
    Integrity,

    #[error("access denied")]
    AccessDenied,

    #[error("permission denied: {0}")]
    Permission(String),

    #[error("unknown user {0:?}")]
    UnknownUser(String),

    #[error("user {0:?} already exists")]
    UserExists(String),

    #[error("object {0:?} not found")]
    NotFound(String),

    #[error("invalid object id {0:?}")]
    InvalidId(String),

    #[error("trace line {line}: {reason}")]
    Trace { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
