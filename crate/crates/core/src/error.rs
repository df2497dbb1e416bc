//! Error types shared across the simulator.

use crate::rf_frontend::MatchingNetwork;

/// Crate-wide error type.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value violates an invariant. The message is
    /// path-qualified ("link.plf: ...") when it originates from config
    /// validation.
    #[error("config error: {0}")]
    Config(String),

    /// A numeric routine failed to converge or produced a non-finite value.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// The tuner could not bring |gamma| below the acceptance level within
    /// the component bounds. The best network found is carried along so
    /// callers can inspect how close it got.
    #[error("untunable load: best |gamma| = {gamma:.6} with L = {} nH, C = {} pF", best.l_henries * 1e9, best.c_farads * 1e12)]
    Untunable { gamma: f64, best: MatchingNetwork },

    /// Calibration could not satisfy the anchor set.
    #[error("calibration infeasible: worst residual {residual:.6} on anchor `{anchor}`")]
    Calibration { residual: f64, anchor: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
