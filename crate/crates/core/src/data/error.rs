use std::path::PathBuf;

use super::Label;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("dataset file not found: {0}")]
    MissingFile(PathBuf),
    #[error("row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("row {row}: unknown label value {value:?}")]
    UnknownLabelValue { row: usize, value: String },
    #[error("not enough {label} instances: have {have}, need {need}")]
    InsufficientClassCount { label: Label, have: usize, need: usize },
    #[error("correctness map does not cover the dataset ({missing} ids missing, {extra} unknown ids)")]
    CorrectnessCoverageMismatch { missing: usize, extra: usize },
    #[error("duplicate instance id {0}")]
    DuplicateId(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
