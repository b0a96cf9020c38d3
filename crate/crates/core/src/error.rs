use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |H - H^dagger| = {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("eigensolver did not converge")]
    ConvergenceFailure,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("principal angles need two non-zero subspaces")]
    EmptySubspace,

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("supports share a common subspace of dimension {dim}; split it off first")]
    CommonSubspacePresent { dim: usize },

    #[error("reduced POVM is not an unambiguous measurement on the reduced problem: {0}")]
    NotUsdOnReduced(String),

    #[error("invalid pure-state pair: {0}")]
    InvalidPair(String),

    #[error("regime {requested} does not match the pair (expected {actual})")]
    RegimeMismatch { requested: String, actual: String },

    #[error("oracle did not converge (duality gap {gap:e})")]
    NotConverged { gap: f64 },

    #[error("joint support dimension {dim} exceeds the oracle limit {limit}")]
    TooLarge { dim: usize, limit: usize },

    #[error("prior of state {index} is 1; the complementary mixture is undefined")]
    DegeneratePrior { index: usize },

    #[error("infeasible support shape: {0}")]
    InfeasibleShape(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("invalid oracle configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),
}
