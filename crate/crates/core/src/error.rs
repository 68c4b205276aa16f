use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("non-finite input to {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("inverse B-H lookup for b = {b} T did not converge; last bracket [{lo}, {hi}] A/m")]
    InverseNotConverged { b: f64, lo: f64, hi: f64 },

    #[error("dc operating point did not converge after {iterations} iterations (residual trace {trace:?})")]
    OperatingPoint { iterations: usize, trace: Vec<f64> },

    #[error("Newton iteration failed at t = {t} s after {iterations} iterations (residual {residual:e})")]
    StepFailed {
        t: f64,
        iterations: usize,
        residual: f64,
        flux_left: f64,
        flux_right: f64,
        i_ac: f64,
    },

    #[error("singular Jacobian")]
    Singular,

    #[error("length mismatch: {left} vs {right} samples")]
    LengthMismatch { left: usize, right: usize },

    #[error("series of {len} samples is shorter than window {window}")]
    ShortSeries { len: usize, window: usize },

    #[error("window must be at least one sample")]
    EmptyWindow,

    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
