use thiserror::Error;

/// Errors raised anywhere in the simulator, analysis and certificate layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field length {found} does not match grid with {expected} cells")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid initial data: {0}")]
    InvalidInitialData(String),

    #[error("invalid step controls: {0}")]
    InvalidControls(String),

    #[error("time step {dt:e} exceeds the stability limit {limit:e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("non-finite value in {field} at step {step} (t = {t})")]
    NonFinite {
        field: &'static str,
        step: u64,
        t: f64,
    },

    #[error("u is below the front threshold everywhere (empty support)")]
    EmptySupport,

    #[error("not enough samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("nonpositive value {value} at t = {t} in exponential fit window")]
    NonPositiveSample { t: f64, value: f64 },

    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    #[error("certificate search infeasible; worst condition `{condition}` with margin {margin:e}")]
    Infeasible { condition: String, margin: f64 },

    #[error("profile evaluated at nonpositive shifted time tau + t = {0}")]
    ProfileTime(f64),

    #[error("trace does not cover the window [{start}, {end}] (trace covers [{covered_start}, {covered_end}])")]
    WindowNotCovered {
        start: f64,
        end: f64,
        covered_start: f64,
        covered_end: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
