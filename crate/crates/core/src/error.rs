use alloc::string::String;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("invalid network: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PowerFlowError {
    #[error("power flow did not converge after {iterations} iterations (mismatch {mismatch:e} pu)")]
    NonConvergence { iterations: usize, mismatch: f64 },
    #[error("singular power-flow jacobian at iteration {iteration}")]
    SingularJacobian { iteration: usize },
    #[error("injection references unknown bus {0}")]
    UnknownBus(u32),
    #[error("invalid power-flow options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LossModelError {
    #[error("power flow failed at device injection [{:.3}, {:.3}, {:.3}] kW: {source}", injection[0], injection[1], injection[2])]
    PowerFlow {
        injection: [f64; 3],
        source: PowerFlowError,
    },
    #[error("fitted loss matrix is indefinite (eigenvalue {eigenvalue:e}, norm {norm:e})")]
    Indefinite { eigenvalue: f64, norm: f64 },
    #[error("fitting box must have positive half-widths")]
    EmptyBox,
    #[error("least-squares normal equations are singular")]
    SingularFit,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DesignError {
    #[error("converter fractions must be non-negative and sum to one, got [{}, {}, {}]", .0[0], .0[1], .0[2])]
    BadAlpha([f64; 3]),
    #[error("device rating must be positive, got {0}")]
    BadRating(f64),
    #[error("selector state row {0} must connect its converter to exactly one feeder")]
    BadSelector(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QpError {
    #[error("initial point violates constraint {index} by {violation:e}")]
    InfeasibleStart { index: usize, violation: f64 },
    #[error("active-set iteration limit ({0}) reached")]
    IterationLimit(usize),
    #[error("problem is unbounded below")]
    Unbounded,
    #[error("dimension mismatch: {0}")]
    Dimension(&'static str),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DispatchError {
    #[error("invalid dispatch problem: {0}")]
    InvalidProblem(String),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error("convex subproblem failed: {0}")]
    Solver(#[from] QpError),
    #[error("subproblem for selector state {state} reported infeasible")]
    InfeasibleState { state: String },
}
