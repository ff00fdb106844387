use thiserror::Error;

use crate::privacy::PrivacyAudit;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("schema: {0}")]
    Schema(String),

    #[error("row {row}: expected {expected} cells, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("header does not match schema (missing: [{}], extra: [{}])", missing.join(", "), extra.join(", "))]
    HeaderMismatch {
        missing: Vec<String>,
        extra: Vec<String>,
    },

    #[error("attribute {0:?} not found")]
    UnknownAttribute(String),

    #[error("column {attribute:?}, row {row}: {value:?} is not an integer")]
    NotNumeric {
        attribute: String,
        row: usize,
        value: String,
    },

    #[error("label {0:?} occurs only once; cannot stratify")]
    SingletonLabel(String),

    #[error("hierarchy {attribute:?}: value {value:?} has conflicting generalization paths")]
    ConflictingPath { attribute: String, value: String },

    #[error("hierarchy {attribute:?}: value {value:?} is not covered")]
    UnknownValue { attribute: String, value: String },

    #[error("hierarchy {attribute:?}: level {level} exceeds height {height}")]
    LevelOutOfRange {
        attribute: String,
        level: usize,
        height: usize,
    },

    #[error("distributions are defined on different supports")]
    SupportMismatch,

    #[error("partition has no equivalence classes")]
    EmptyPartition,

    #[error("dataset has no rows")]
    EmptyDataset,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("labels contain a single class")]
    SingleClass,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no lattice node satisfies the requirement")]
    Unsatisfiable { best: Option<Box<PrivacyAudit>> },
}
