use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative or adaptive procedure exhausted its budget.
    #[error("no convergence: {0}")]
    NonConvergence(String),

    /// Moment matching needs a single exposure shared by all records.
    #[error("records have heterogeneous exposures ({first} and {other}); use maximum likelihood")]
    HeterogeneousExposure { first: f64, other: f64 },

    /// Sample variance does not exceed the sample mean.
    #[error("no overdispersion: variance {variance} <= mean {mean}")]
    NoOverdispersion { mean: f64, variance: f64 },

    /// The likelihood has no interior maximum for the given data.
    #[error("parameters not identifiable: {0}")]
    NonIdentifiable(String),

    /// Too few bins left after merging for a chi-square statistic.
    #[error("only {0} bin(s) survive merging; at least 2 are required")]
    TooFewBins(usize),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

/// Checks that `value` is finite and strictly positive.
pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{name} must be finite and > 0 (got {value})"
        )))
    }
}
