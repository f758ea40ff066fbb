use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("gamma function has a pole at z = {z}")]
    Pole { z: f64 },

    #[error("gamma({z}) overflows f64; use log_gamma_ratio instead")]
    Overflow { z: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("order s = {s} is within {tol:e} of an integer; use the extended kernel")]
    NearIntegerOrder { s: f64, tol: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("certified truncation {certified:e} exceeds the error budget {budget:e}")]
    BudgetExceeded { certified: f64, budget: f64 },

    #[error("quadrature did not converge: node doubling changed the result by {change:e} (tolerance {tolerance:e})")]
    NonConvergence { change: f64, tolerance: f64 },

    #[error("support [{lo}, {hi}] exceeds the window [-{window}, {window}]")]
    SupportOverflow { lo: i64, hi: i64, window: i64 },

    #[error("time step {dt} exceeds the stability limit {limit}")]
    Stability { dt: f64, limit: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
