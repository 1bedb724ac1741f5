use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("R = {r:.6e} exceeds the configured maximum {max:.3e}")]
    Overflow { r: f64, max: f64 },

    #[error("empty construction: {0}")]
    EmptyConstruction(String),

    #[error("precision: {0}")]
    Precision(String),

    #[error("phase reduction mismatch: naive {naive:.3e} vs decomposed {decomposed:.3e} (difference {difference:.3e})")]
    Reduction {
        naive: f64,
        decomposed: f64,
        difference: f64,
    },

    #[error("phase left the window: deviation {deviation:.4e} at x = {x:?}, xi = {xi:?}")]
    PhaseEscape {
        deviation: f64,
        x: Vec<f64>,
        xi: Vec<f64>,
    },

    #[error("balance violation in regime {regime}: {detail}")]
    BalanceViolation { regime: String, detail: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("parse error in {field}: {message}")]
    Parse { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("internal inconsistency: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad input rather than by a failed check.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::InvalidParams(_) | Error::Parse { .. } | Error::Overflow { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
