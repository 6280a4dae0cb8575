use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A vector or matrix had the wrong length.
    #[error("shape mismatch for {what}: expected {expected}, found {found}")]
    Shape {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// Parameters violate a structural invariant (non-finite values, sigma2 <= 0, ...).
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    /// Exact enumeration was requested for a model with too many hidden units.
    #[error("exact enumeration over {hidden} hidden units exceeds the limit of {max}")]
    Capacity { hidden: usize, max: usize },
    /// Training or sampling was asked to work on unusable data.
    #[error("data error: {0}")]
    Data(String),
    /// A precondition of an operation does not hold.
    #[error("contract violation: {0}")]
    Contract(String),
    /// Overlap reconstruction found a pixel that no patch covers.
    #[error("pixel ({row}, {col}) is not covered by any patch")]
    Coverage { row: usize, col: usize },
}

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Shape {
            what,
            expected,
            found,
        })
    }
}
