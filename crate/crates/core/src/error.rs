use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown {kind} `{token}` (valid: {valid})")]
    UnknownToken { kind: &'static str, token: String, valid: String },

    #[error("coefficient table has {count} entries, exhaustive selection is limited to {limit}")]
    TableTooLarge { count: usize, limit: usize },

    #[error("coefficient {j},{k} has no true value attached")]
    MissingTruth { j: i32, k: i64 },

    #[error("tail energy {tail_energy:e} exceeds 1e-6 x oracle denominator {oracle_denom:e} for {cell}")]
    TailEnergy { cell: String, tail_energy: f64, oracle_denom: f64 },

    #[error("plan file line {line}: {message}")]
    Plan { line: usize, message: String },

    #[error("thread pool: {0}")]
    ThreadPool(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of numerical guards, as opposed to bad input.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(self, Error::TailEnergy { .. })
    }
}
