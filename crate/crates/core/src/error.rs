use thiserror::Error;

use crate::network::Violation;
use crate::units::Unit;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnitError {
    #[error("unknown unit `{0}`")]
    Unknown(String),
    #[error("cannot convert {0} to {1}")]
    Incompatible(Unit, Unit),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(Violation),

    #[error("pipe {pipe}: {parameter} must be positive and finite, got {value}")]
    PipeParameter {
        pipe: usize,
        parameter: &'static str,
        value: f64,
    },

    #[error("network numerically disconnected: weighted Laplacian is not positive definite")]
    NumericallyDisconnected,

    #[error("flow vector has length {got}, network has {expected} pipes")]
    FlowLength { expected: usize, got: usize },

    #[error("Jacobian undefined near zero flow on pipe {pipe} (|q| = {flow:e} cfs)")]
    NearZeroFlow { pipe: usize, flow: f64 },

    #[error("finite-difference step {step:e} too large for flow {flow:e} cfs on pipe {pipe}")]
    StepTooLarge { pipe: usize, step: f64, flow: f64 },

    #[error("eigenvalue iteration did not converge ({dim}x{dim} matrix, inf-norm {norm:e})")]
    EigenNoConvergence { dim: usize, norm: f64 },

    #[error("singular Newton system at iteration {iteration}")]
    SingularNewton { iteration: usize },

    #[error("invalid solver configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Unit(#[from] UnitError),
}
