use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A fit converged but its result is outside the model's range of validity.
    #[error("fit invalid: {0}")]
    FitInvalid(String),

    /// A numerical routine failed to converge or hit a singular system.
    #[error("numerical error: {message} ({diagnostics})")]
    Numerical { message: String, diagnostics: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

/// Checks that every named value is finite.
pub(crate) fn ensure_finite(values: &[(&str, f64)]) -> Result<()> {
    for (name, v) in values {
        if !v.is_finite() {
            return domain(format!("{name} must be finite, got {v}"));
        }
    }
    Ok(())
}
