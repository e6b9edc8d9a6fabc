use thiserror::Error;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("scenario failed validation ({} violation(s)): {}", .0.len(), summarize(.0))]
    InvalidScenario(Vec<Violation>),

    #[error("instance too large: {count} routing configurations exceed the cap of {cap}; use alternate convex search instead")]
    InstanceTooLarge { count: u128, cap: u128 },

    #[error("scenario has no bandwidth limits")]
    MissingBandwidth,

    #[error("scenario has no delay matrices")]
    MissingDelays,

    #[error("infeasible routing: {0}")]
    InfeasibleRouting(String),

    #[error("unknown parameter path `{0}`")]
    UnknownParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn summarize(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
