use thiserror::Error;

use crate::analysis::SweepResult;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid cavity configuration: {0}")]
    InvalidConfig(String),

    #[error("inconsistent coupling table: {0}")]
    InconsistentCouplings(String),

    #[error("invalid initial state: {0}")]
    InitialState(String),

    #[error("generator dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("initial state has norm² {norm_sq}, expected 1 within {tol:e}")]
    NotNormalized { norm_sq: f64, tol: f64 },

    #[error(
        "{method} propagation: norm drift {drift:e} at t = {time} exceeds {tol:e} \
         (internal step {dt_internal:e}, {steps} steps)"
    )]
    NormDrift {
        method: &'static str,
        drift: f64,
        time: f64,
        tol: f64,
        dt_internal: f64,
        steps: u64,
    },

    #[error("invalid time grid: {0}")]
    TimeGrid(String),

    #[error("invalid time series: {0}")]
    Series(String),

    #[error("invalid density matrix: {0}")]
    Density(String),

    #[error("sweep aborted at x = {x} λa after {} completed points: {source}", .partial.rows.len())]
    Sweep {
        x: f64,
        partial: Box<SweepResult>,
        source: Box<Error>,
    },
}

impl Error {
    /// True for failures that signal a numerical tolerance violation rather
    /// than bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NormDrift { .. } => true,
            Error::Sweep { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub fn is_resource_cap(&self) -> bool {
        match self {
            Error::DimensionCap { .. } => true,
            Error::Sweep { source, .. } => source.is_resource_cap(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
