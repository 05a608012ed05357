use thiserror::Error;

use crate::model::SolveReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),

    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("index {index} out of range for {len} UAVs")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("domain error in {func}: argument {arg} outside {domain}")]
    Domain {
        func: &'static str,
        arg: f64,
        domain: &'static str,
    },

    #[error("no sign change on bracket [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("{what} did not converge within {iterations} iterations")]
    MaxIterations { what: &'static str, iterations: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("polyblock search stopped after {iterations} iterations with bound gap {gap:.3e}")]
    NotConverged {
        iterations: usize,
        gap: f64,
        best: Box<SolveReport>,
    },

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
