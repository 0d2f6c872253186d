use thiserror::Error;

/// Errors raised while reading tabular data against its schema.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemaError {
    #[error("column for feature `{feature}` is missing from the CSV header")]
    MissingColumn { feature: String },
    #[error("feature `{feature}`, row {row}: `{value}` is not a number")]
    NonNumeric {
        feature: String,
        row: usize,
        value: String,
    },
    #[error("feature `{feature}`, row {row}: level `{value}` is not declared in the schema")]
    UnseenLevel {
        feature: String,
        row: usize,
        value: String,
    },
    #[error("row {row}: label `{value}` is not binary (expected 0 or 1)")]
    NonBinaryLabel { row: usize, value: String },
    #[error("feature name `{0}` appears more than once")]
    DuplicateFeature(String),
    #[error("categorical feature `{0}` needs at least two levels")]
    TooFewLevels(String),
    #[error("continuous feature `{0}` must not declare levels")]
    UnexpectedLevels(String),
    #[error("row has {found} values, schema expects {expected}")]
    Width { expected: usize, found: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("usage: {0}")]
    Usage(String),
    #[error("training: {0}")]
    Training(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
