use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("angle out of range: {0}")]
    AngleOutOfRange(String),

    #[error("coincident positions: {0}")]
    CoincidentPositions(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("channel tensor carries no orientation gradients")]
    MissingGradient,

    #[error("non-positive mean-square error {value} for pair {pair}")]
    NonPositiveMse { pair: usize, value: f64 },

    #[error("zero-forcing needs at least as many elements as pairs (M = {elements}, K = {pairs})")]
    ZfNeedsMoreElements { elements: usize, pairs: usize },

    #[error("infeasible orientation for element ({pair}, {element})")]
    InfeasibleOrientation { pair: usize, element: usize },

    #[error("exhaustive search too large: {0} assignments (limit 1e6)")]
    SearchTooLarge(f64),

    #[error("invalid search parameters: {0}")]
    InvalidSearch(String),

    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
