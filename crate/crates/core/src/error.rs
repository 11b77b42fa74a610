use thiserror::Error;

use crate::model::TuningParams;

/// Errors surfaced by model construction, exploration and the search drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid platform: {0}")]
    InvalidPlatform(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid tuning parameters wg={wg} ts={ts} for size {size}: {reason}")]
    InvalidParams {
        wg: u32,
        ts: u32,
        size: u32,
        reason: String,
    },

    /// The configuration is well formed but the kernel would index past the
    /// end of global memory with it.
    #[error("infeasible configuration wg={} ts={} for size {size}: {reason}", params.wg, params.ts)]
    Infeasible {
        params: TuningParams,
        size: u32,
        reason: String,
    },

    /// A non-terminal state without enabled transitions. Always a model bug.
    #[error("deadlock at time {time} after {steps} transitions (wg={}, ts={}): {summary}", params.wg, params.ts)]
    Deadlock {
        params: TuningParams,
        time: u64,
        steps: usize,
        summary: String,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("corrupt trace at transition {index}: {reason}")]
    CorruptTrace { index: usize, reason: String },

    #[error("trace parse error on line {line}: {reason}")]
    TraceParse { line: usize, reason: String },

    #[error("upper bound T={0} is too small: no counterexample exists at it")]
    UpperBoundTooSmall(u64),

    #[error("model never terminated within the exploration limits")]
    NeverTerminated,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
