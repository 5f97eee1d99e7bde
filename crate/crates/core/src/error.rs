use thiserror::Error;

/// Errors produced by sketch construction, querying, and the file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("angle is undefined for a zero vector")]
    ZeroVector,

    #[error("invalid vector: {0}")]
    InvalidVector(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("sketch is empty")]
    EmptySketch,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid group count {groups} for {rows} rows (must be odd and in 1..=rows)")]
    InvalidGroups { groups: usize, rows: usize },

    #[error("estimator does not match sketch kind: {0}")]
    WrongEstimator(String),

    #[error("unmatched deletion: counter would drop below zero")]
    UnmatchedDeletion,

    #[error("sketches are not mergeable: field `{field}` differs")]
    ConfigMismatch { field: &'static str },

    #[error("bad magic bytes")]
    BadMagic,

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),

    #[error("truncated input")]
    Truncated,

    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },

    #[error("corrupt sketch: {0}")]
    Corrupt(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("composite model: {0}")]
    Composite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
