use thiserror::Error;

/// Errors produced by the design, certification and simulation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("synthesis failure: {0}")]
    SynthesisFailure(String),

    #[error("history underflow: requested t = {requested}, earliest available t = {available}")]
    HistoryUnderflow { requested: f64, available: f64 },

    #[error("convergence failure after {iterations} iterations (last increment {increment:e})")]
    ConvergenceFailure { iterations: usize, increment: f64 },

    #[error("invalid certificate parameters: {0}")]
    InvalidCertificateParameters(String),

    #[error("infeasible certificate: {0}")]
    InfeasibleCertificate(String),

    #[error("simulation diverged at t = {t}")]
    SimulationDiverged { t: f64 },

    #[error("insufficient data: {found} samples in fit window, need at least {needed}")]
    InsufficientData { found: usize, needed: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
