use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no samples")]
    NoSamples,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("sample {index} is missing a {what}")]
    MissingField { index: usize, what: &'static str },

    #[error("all-zero weight denominator; add smoothing η > 0")]
    ZeroDenominator,

    #[error("domain {0} has vanishing posterior mass")]
    VanishingDomainMass(usize),

    #[error("line search diverged at iteration {iteration}: objective {objective}, gradient norm {grad_norm}")]
    LineSearch {
        iteration: usize,
        objective: f64,
        grad_norm: f64,
    },

    #[error("every bandwidth candidate gives -inf held-out log density; try a wider grid")]
    DegenerateBandwidthGrid,

    #[error("grid budget exceeded: {points} lattice points > cap {cap}; use the iterative solver")]
    GridBudgetExceeded { points: u128, cap: u128 },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
