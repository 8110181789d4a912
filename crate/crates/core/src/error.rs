use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument or configuration field is outside its valid domain.
    #[error("{field}: {reason}")]
    Domain { field: &'static str, reason: String },

    /// The oncoming vehicle would be no farther away than the blocking
    /// vehicle, so cooperative sensing has no line to look along.
    #[error("infeasible geometry: sensing distance {sensing_distance:.4} m is not positive")]
    InfeasibleGeometry { sensing_distance: f64 },

    /// Monte Carlo settings that cannot estimate the requested quantile.
    #[error("outage spec: {0}")]
    Estimability(String),
}

impl Error {
    pub(crate) fn domain(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            field,
            reason: reason.into(),
        }
    }
}

/// Fails with [`Error::Domain`] unless `ok` holds.
pub(crate) fn ensure(ok: bool, field: &'static str, reason: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::domain(field, reason()))
    }
}
