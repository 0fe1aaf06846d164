use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed input data: unsorted breakpoints, length mismatches, non-finite values.
    #[error("validation error: {0}")]
    Validation(String),
    /// Argument outside the domain of an operation (e.g. `s > 1`, `delta >= 1`).
    #[error("domain error: {0}")]
    Domain(String),
    /// Problem too large for the requested evaluation mode.
    #[error("size error: {0}")]
    Size(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

/// Checks `delta ∈ (0, 1)`, the range on which the partition moduli are defined.
pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("delta must lie in (0,1), got {delta}")))
    }
}
