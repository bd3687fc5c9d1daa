use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (max |A - A†| = {defect:e})")]
    NotHermitian { defect: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("state is not Hermitian (max |ρ - ρ†| = {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("state trace is {trace}, expected 1")]
    BadTrace { trace: f64 },
    #[error("NotPhysical: state is not positive semidefinite (most negative eigenvalue {min_eigenvalue:e})")]
    NotPhysical { min_eigenvalue: f64 },
    #[error("invalid state description: {0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("channel parameter p = {0} is outside [0, 1]")]
    DomainError(f64),
    #[error("Kraus operators are not complete (max |Σ K†K - 1| = {defect:e})")]
    Incomplete { defect: f64 },
    #[error("channel has no Kraus operators")]
    Empty,
    #[error("unknown channel '{0}'")]
    Unknown(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("optimizer failed to converge: {0}")]
    OptimizerFailure(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("sweep config: {0}")]
    InvalidConfig(String),
    #[error("series has {0} points; kink detection needs at least 5")]
    GridTooCoarse(usize),
    #[error("series is not on a uniform grid")]
    NonUniformGrid,
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("at p = {p}: {source}")]
    Optimizer {
        p: f64,
        #[source]
        source: OptimizerError,
    },
    #[error("malformed CSV: {0}")]
    Csv(String),
}
