use thiserror::Error;

/// Errors raised by the channel, region and solver routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid scenario configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("index {index} out of range for {context} (len {len})")]
    IndexOutOfRange {
        context: &'static str,
        index: usize,
        len: usize,
    },

    #[error("deployment mismatch: expected {expected}, found {found}")]
    DeploymentMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("reflection coefficient {index} is not unit-modulus (|phi| = {modulus})")]
    NotUnitModulus { index: usize, modulus: f64 },

    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("negative tolerance {0}")]
    NegativeTolerance(f64),

    #[error("enumeration budget exceeded: {needed} evaluations requested, budget {budget}")]
    BudgetExceeded { needed: f64, budget: f64 },

    #[error("assumption violated: {0}")]
    AssumptionViolation(String),

    #[error("element update infeasible even at beta = 1")]
    InfeasibleElement,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config parse error: {0}")]
    ConfigParse(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
