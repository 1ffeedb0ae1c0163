use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the region where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The consensus binomial sum is only computed exactly for small panels.
    #[error("consensus panel too large: K = {k} exceeds the supported maximum of {max}")]
    Overflow { k: u32, max: u32 },

    #[error("value iteration did not converge within {iterations} iterations (last change {last_change:e})")]
    NonConvergence { iterations: usize, last_change: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid simulation config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

/// Checks that `value` is a probability.
pub(crate) fn check_unit(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} = {value} must lie in [0, 1]")))
    }
}

pub(crate) fn check_eps(value: f64) -> Result<()> {
    if (0.0..0.5).contains(&value) {
        Ok(())
    } else {
        Err(Error::domain(format!("eps = {value} must lie in [0, 0.5)")))
    }
}

pub(crate) fn check_nonneg(name: &str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} = {value} must be a finite value >= 0")))
    }
}
