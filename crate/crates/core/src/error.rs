use alloc::string::String;

/// Errors reported by the reconstruction library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unstable autoregressive polynomial")]
    UnstableModel,
    #[error("empty block stream")]
    EmptyStream,
    #[error("ruler does not cover lag {0}")]
    RulerCoverage(i64),
    #[error("unsupported cumulant order {0}")]
    UnsupportedOrder(usize),
    #[error("reference vector has zero norm")]
    ZeroNorm,
    #[error("block of length {block} too short for lag {lag}")]
    BlockTooShort { block: usize, lag: i64 },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
