use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("field length {got} does not match grid ({expected} interior nodes)")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("non-finite value {value} at node {node}")]
    NonFinite { node: usize, value: f64 },

    #[error("nonlinearity evaluated outside its safe range at s = {s} (|s| must stay below {limit})")]
    NonlinearityOverflow { s: f64, limit: f64 },

    #[error("discrete summation-by-parts check failed: pairing {pairing} vs energy {energy}")]
    Discretization { pairing: f64, energy: f64 },

    #[error("explicit step refused: dt = {dt} exceeds stability limit {limit}")]
    Unstable { dt: f64, limit: f64 },

    #[error(
        "nonlinear solve failed at t = {t} (dt = {dt}, relative residual {residual:e}) after {halvings} step halvings"
    )]
    SolveFailed {
        t: f64,
        dt: f64,
        residual: f64,
        halvings: u32,
        /// Last accepted field, kept for diagnostic dumps.
        last_state: Vec<f64>,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
