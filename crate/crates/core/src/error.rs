use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Invalid problem dimensions, quantizer settings, or family parameters.
    #[error("configuration error: {0}")]
    Config(String),
    /// A grid point at level 0 has no parent.
    #[error("grid point at level 0 has no parent")]
    NoParent,
    /// An operation required a point on a specific grid level.
    #[error("expected a point at level {expected}, got level {actual}")]
    WrongLevel { expected: u32, actual: u32 },
    /// A packed bit stream could not be decoded.
    #[error("decode error: {0}")]
    Decode(String),
    /// The server received no finest-level candidate.
    #[error("estimation failed: no finest-level candidate was received")]
    EstimationFailed,
    /// An input that must be non-empty was empty.
    #[error("empty input: {0}")]
    Empty(&'static str),
    /// An enumeration would exceed the supported state space.
    #[error("state space too large: {0}")]
    TooLarge(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! config_err {
    ($($arg:tt)*) => {
        $crate::Error::Config(alloc::format!($($arg)*))
    };
}
pub(crate) use config_err;
