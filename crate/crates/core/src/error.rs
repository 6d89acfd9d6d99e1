use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid material law: {0}")]
    InvalidLaw(String),

    #[error("material law is not coercive on Re z = {nu} (c estimate {c_estimate:e})")]
    NotCoercive { nu: f64, c_estimate: f64 },

    #[error("invalid scheme: {0}")]
    InvalidScheme(String),

    #[error("coefficient vector has resolution {found}, scheme needs at least {needed}")]
    InsufficientResolution { needed: usize, found: usize },

    #[error("singular symbol at z = {re}{im:+}i: {detail}")]
    SingularSymbol { re: f64, im: f64, detail: String },

    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),

    #[error("oracle instance invalid: {0}")]
    InvalidInstance(String),

    #[error("configuration error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
