use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported torus dimension {0} (allowed 1..=6)")]
    UnsupportedDimension(usize),

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("system is not separable: term with wave vector {wave:?} couples coordinates")]
    NonSeparable { wave: Vec<i64> },

    #[error("metric is not diagonal")]
    NonDiagonalMetric,

    #[error("cell budget exceeded: {cells} top cells requested, budget {budget}")]
    BudgetExceeded { cells: u64, budget: u64 },

    #[error("invalid resolution {0:?} (each axis needs at least 8 samples)")]
    InvalidResolution(Vec<usize>),

    #[error("closure violated: {dim}-cell {cell} is present but one of its faces is not")]
    ClosureViolation { dim: usize, cell: usize },

    #[error("level {level} is a separatrix energy; the period diverges")]
    SeparatrixEnergy { level: f64 },

    #[error("level {level} lies below the factor minimum {min}")]
    BelowMinimum { level: f64, min: f64 },

    #[error("energy {energy} does not exceed max U + margin = {threshold}; the Jacobi metric degenerates")]
    DegenerateEnergy { energy: f64, threshold: f64 },

    #[error("homotopy class must be non-zero")]
    ZeroClass,

    #[error("cell {0} is not a top-dimensional (regular) cell")]
    NotRegularCell(usize),

    #[error("cannot place a sample point: {0}")]
    SampleFailure(String),

    #[error("{0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
