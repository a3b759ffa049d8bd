use thiserror::Error;

use crate::charts::ChartId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error in chart {chart:?}: {reason}")]
    Domain { chart: ChartId, reason: String },

    #[error("step budget of {max_steps} steps exhausted at tau = {tau}")]
    StepBudgetExhausted { max_steps: u64, tau: f64 },

    #[error("step size {h:e} underflowed at tau = {tau} (approaching a singularity)")]
    StepUnderflow { h: f64, tau: f64 },

    #[error("series coefficients overflowed f64 range; largest valid order is {last_valid}")]
    Overflow { last_valid: usize },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("Pade approximant has a pole on the Laplace path near u = {location}")]
    PoleOnPath { location: f64 },

    #[error("quadrature did not converge (estimated error {error:e})")]
    Quadrature { error: f64 },

    #[error("no convergence: {what} (best residual {residual:e})")]
    NonConvergence { what: String, residual: f64 },

    #[error("no sign change found while bracketing the root in [{lo}, {hi}]")]
    RootBracket { lo: f64, hi: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn domain(chart: ChartId, reason: impl Into<String>) -> Self {
        Error::Domain {
            chart,
            reason: reason.into(),
        }
    }
}
