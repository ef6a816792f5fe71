use thiserror::Error;

/// Errors raised by the design, dynamics and metrology layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("unsupported input: {0}")]
    UnsupportedInput(String),
    #[error("design infeasible: {0}")]
    DesignInfeasible(String),
    #[error(
        "step too coarse for control `{control}` (peak rate {rate:.4e}): dt = {dt:.4e}, need dt <= {required_dt:.4e}"
    )]
    Stiffness {
        control: &'static str,
        rate: f64,
        dt: f64,
        required_dt: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
