use thiserror::Error;

/// Errors surfaced by the optimization and simulation layers.
#[derive(Debug, Error)]
pub enum Error {
    /// The evaluation budget is spent; no further objective calls are allowed.
    #[error("evaluation budget exhausted")]
    BudgetExhausted,

    /// A point violates the problem bounds by more than the feasibility tolerance.
    #[error("coordinate {index} = {value} outside [{lower}, {upper}]")]
    OutOfBounds {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("empty input")]
    EmptyInput,

    #[error("empty evaluation trace")]
    EmptyTrace,

    /// An initialization strategy that needs a user guess was configured without one.
    #[error("initialization strategy requires an initial guess")]
    MissingGuess,

    #[error("degenerate interval [{a}, {b}]")]
    DegenerateInterval { a: f64, b: f64 },

    #[error("negative rate {value} for well {well} at step {step}")]
    NegativeRate {
        well: String,
        step: usize,
        value: f64,
    },

    #[error("pressure solve failed: {0}")]
    NonConvergedPressure(String),

    /// The well configuration cannot be balanced in an incompressible closed system.
    #[error("infeasible rates: {0}")]
    InfeasibleRates(String),

    #[error("well trajectory intersects no grid cell")]
    EmptyPerforation,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("inconsistent configuration: {0}")]
    ConfigInconsistent(String),

    /// Experiment configuration errors (bad fields, missing files, invalid combinations).
    #[error("config error: {0}")]
    Config(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
