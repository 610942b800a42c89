use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("trace is not 1 (got {trace})")]
    TraceNotOne { trace: f64 },

    #[error("not unitary (max deviation of B^dagger B from identity {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("eigensolver did not converge")]
    EigenFailure,

    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error("bad input: {0}")]
    BadInput(String),

    #[error("entropy undefined: {0}")]
    Undefined(String),

    #[error("{what}: residual {residual:.3e} exceeds tolerance {tolerance:.1e}")]
    VerificationFailed {
        what: String,
        residual: f64,
        tolerance: f64,
    },

    #[error("source does not majorize target (partial-sum gap {gap:.3e} at k = {index})")]
    NotMajorized { index: usize, gap: f64 },

    #[error("catalyst oracle returned an invalid pair: {0}")]
    OracleInvalid(String),

    #[error("relaxed constraint cannot be bracketed by the closed-form family: {0}")]
    NoBracket(String),

    #[error("constraints are infeasible on the simplex (minimal violation {violation:.3e})")]
    Infeasible { violation: f64 },

    #[error("observed distribution has zero entries; drop them before solving")]
    DegenerateQ,

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("spectrum tails do not fall below {target:.3e} within {cap} levels")]
    TailNotSummable { target: f64, cap: usize },

    #[error("covariance matrix is unphysical (smallest symplectic eigenvalue {min_nu})")]
    Unphysical { min_nu: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
