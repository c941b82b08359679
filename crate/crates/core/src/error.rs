use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    #[error("no root of g in the admissible region: {0}")]
    NoRoot(String),

    #[error("root τ₀ = {tau0} violates the amplitude positivity conditions")]
    PositivityViolation { tau0: f64 },

    #[error("landscape classification failed: {0}")]
    Unclassified(String),

    #[error("the minimizer of f is semi-trivial (τ_min = 0)")]
    SemitrivialMinimizer,

    #[error("target value {target} is outside the attained range ({lo}, {hi})")]
    OutOfRange { target: f64, lo: f64, hi: f64 },

    #[error("no convergence after {iterations} iterations (last change {last_change:e})")]
    NonConvergence { iterations: usize, last_change: f64 },

    #[error("iteration collapsed to zero")]
    CollapseToZero,

    #[error("zero coupling: the linearization is decoupled")]
    ZeroCoupling,

    #[error("weight floor too small: conditioning {conditioning:e} exceeds 1e12")]
    WeightFloorTooSmall { conditioning: f64 },

    #[error("hypotheses not satisfied: {0}")]
    Hypotheses(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 1,
            Error::NonConvergence { .. } | Error::CollapseToZero | Error::Unclassified(_) => 3,
            Error::Io(_) | Error::Json(_) => 1,
            _ => 2,
        }
    }
}
