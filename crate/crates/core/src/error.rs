use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} allocation levels, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("q outside (0,1]: {0}")]
    SwapProbability(f64),

    #[error("gamma outside (1,2): {0}")]
    Gamma(f64),

    #[error("delta outside (0,1): {0}")]
    Delta(f64),

    #[error("level {level} outside 1..={max}")]
    Level { level: u32, max: u32 },

    #[error("allocation kind mismatch: {0}")]
    AllocationKind(&'static str),

    #[error("state space cap exceeded: {states} states > cap {cap}")]
    StateSpaceCap { states: u128, cap: usize },

    #[error("unsupported for exact solve: {0}")]
    Unsupported(String),

    #[error("stationary solve failed: {0}")]
    Solve(String),

    #[error("invalid simulation config: {0}")]
    SimConfig(String),

    #[error("analytic bound is zero")]
    ZeroBound,

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::StateSpaceCap { .. } | Error::Solve(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
