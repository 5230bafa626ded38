use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{kind} is a limit-only geometry and cannot be flowed")]
    NotFlowable { kind: String },
    #[error("chart point {0:?} lies outside the chart domain")]
    OutOfDomain([f64; 3]),
    #[error("time {t} outside the integrated interval [{lo}, {hi}]")]
    TimeOutOfRange { t: f64, lo: f64, hi: f64 },
    #[error("integration stopped after {steps} steps at t = {t}")]
    Incomplete { steps: usize, t: f64, partial: Box<crate::flow::Trajectory> },
    #[error("fit failed: {0}")]
    FitFailed(String),
    #[error("no closed form for {0}")]
    NoClosedForm(String),
}

pub type Result<T> = std::result::Result<T, Error>;
