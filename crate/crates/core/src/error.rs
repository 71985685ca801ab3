use thiserror::Error;

/// Everything that can go wrong while building graphs, sampling functions or
/// evaluating norms and energies.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("window of half-width {half_width} cannot hold one cell of size {cell}")]
    WindowTooSmall { half_width: f64, cell: f64 },

    #[error("norm kind `{kind}` does not apply to this graph: {reason}")]
    IncompatibleKind { kind: String, reason: String },

    #[error("edge {edge} leaves the plane window ({detail})")]
    EdgeOutsideWindow { edge: usize, detail: String },

    #[error("edge {edge}: expected {expected} samples, got {got}")]
    SampleCount {
        edge: usize,
        expected: usize,
        got: usize,
    },

    #[error("grid misalignment: {0}")]
    Misaligned(String),

    #[error("inconsistent traces at level {level}: {detail}")]
    Inconsistent { level: i32, detail: String },

    #[error("linear solver stopped after {iterations} iterations with residual {residual:e}")]
    SolverFailed { iterations: usize, residual: f64 },

    #[error("level {level} exceeds the supported bound {bound} for {what}")]
    LevelTooDeep {
        what: &'static str,
        level: usize,
        bound: usize,
    },

    #[error("kernel exponent {0} is not integrable against piecewise-linear data (need 2 <= p < 3)")]
    Exponent(f64),

    #[error("{0}")]
    Empty(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
