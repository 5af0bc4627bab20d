use thiserror::Error;

use crate::model::JobId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("schedule references unknown job {0}")]
    UnknownJob(JobId),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("policy stalled at t={time} with {pending} unfinished jobs")]
    Stalled { time: String, pending: usize },
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
