use alloc::string::String;

/// Errors raised by builders and analyses.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unsupported degree profile ({j},{k}): K must be a positive multiple of J")]
    UnsupportedProfile { j: usize, k: usize },

    #[error("chain length {l} is shorter than the variable degree {j}")]
    ChainTooShort { j: usize, l: usize },

    #[error("invalid connection geometry: {0}")]
    Geometry(String),

    #[error("host variable {var} was already raised by another connection")]
    HostSaturated { var: usize },

    #[error("invalid protograph: {0}")]
    InvalidProtograph(String),

    #[error("protograph has no transmitted variables")]
    NonPositiveLength,

    #[error("channel parameter {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("invalid rate {0}: must lie in (0, 1)")]
    InvalidRate(f64),

    #[error("density grids do not match")]
    GridMismatch,

    #[error("density evolution does not converge at the upper bracket {upper_db} dB")]
    BracketFailure { upper_db: f64 },

    #[error("inner minimization did not converge: {0}")]
    Optimizer(String),

    #[error("growth rate curve has no usable sign change: {0}")]
    AmbiguousCurve(String),

    #[error("exact enumeration too large: {0}")]
    SizeGuard(String),

    #[error("no 4-cycle-free lift found after {attempts} attempts; last offending pair: columns {col_a} and {col_b}")]
    GirthBudget {
        attempts: usize,
        col_a: usize,
        col_b: usize,
    },

    #[error("protograph has no position metadata for variable {0}")]
    MissingPositions(usize),

    #[error("bad ensemble spec `{0}`")]
    BadSpec(String),
}

pub type Result<T> = core::result::Result<T, Error>;
