use thiserror::Error;

/// Errors raised by the simulation and solver layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("interval ({t0}, {t1}] outside [0, {horizon}]")]
    OutOfRange { t0: f64, t1: f64, horizon: f64 },

    #[error("rate {rate} exceeds stream ceiling {ceiling} for mark {mark}")]
    CeilingExceeded { rate: f64, ceiling: f64, mark: i64 },

    #[error("{entity} jumps from {from} by {mark} at t={time}, leaving the state space")]
    Closure {
        entity: String,
        from: i64,
        mark: i64,
        time: f64,
    },

    #[error("predicted {predicted:.3e} candidate events exceed the budget of {budget:.3e}")]
    Budget { predicted: f64, budget: f64 },

    #[error("edge chain for (x={x}, x~={x_tilde}) has {} closed classes: {classes:?}", classes.len())]
    Reducible {
        x: i64,
        x_tilde: i64,
        classes: Vec<Vec<i64>>,
    },

    #[error("forward equation left the simplex at t={time} (min entry {min_entry:.3e}); retry with step h <= {suggested_step:.3e}")]
    StepSize {
        time: f64,
        min_entry: f64,
        suggested_step: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
