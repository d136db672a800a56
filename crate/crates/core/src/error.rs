use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid cross configuration: {0}")]
    InvalidConfig(String),

    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("duplicate cross time {0}")]
    DuplicateTime(f64),

    #[error("time {t} outside [0, {beta}]")]
    TimeOutOfRange { t: f64, beta: f64 },

    #[error("not a permutation: {0}")]
    NotAPermutation(String),

    #[error("theta must be >= 1, got {0}")]
    ThetaBelowOne(f64),

    #[error("loop weight {weight} outside [1, {theta_max}] at vertical length {length}")]
    WeightOutOfRange {
        weight: f64,
        theta_max: f64,
        length: f64,
    },

    #[error("mixed cross at time {t} has {red} red endpoints, expected exactly one")]
    BadMixedCross { t: f64, red: usize },

    #[error("inconsistent colouring: {0}")]
    InconsistentColouring(String),

    #[error("underpowered test: {got} observations, need at least {need}")]
    Underpowered { got: usize, need: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("sampler misconfiguration: {0}")]
    Sampler(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
