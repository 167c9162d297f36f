use thiserror::Error;

/// Errors raised by model evaluation, simulation and the estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The flow was asked to run past the boundary of the current mode.
    #[error("flow undefined past the boundary: dt = {dt} exceeds boundary-hit time {boundary_time}")]
    FlowDomain { dt: f64, boundary_time: f64 },

    /// The model cannot produce a valid jump law from some state.
    #[error("model validation failed: {0}")]
    ModelValidation(String),

    /// Parameters violate the invariants of a system or method.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Interior kernel requested at a state with zero total jump rate.
    #[error("undefined interior kernel: total jump rate is zero at {0}")]
    UndefinedKernel(String),

    /// The preponderant extension carries all the mass, nothing to avoid.
    #[error("degenerate survival record: {0}")]
    DegenerateRecord(String),

    /// The rejection oracle ran out of tries.
    #[error("rejection oracle exhausted after {0} tries")]
    OracleExhausted(u64),
}

pub type Result<T> = std::result::Result<T, Error>;
