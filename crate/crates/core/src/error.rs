use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic number in {path}: expected {expected:#010x}, found {found:#010x}")]
    BadMagic { path: PathBuf, expected: u32, found: u32 },

    #[error("truncated file {path}: expected {expected} bytes, found {found}")]
    Truncated { path: PathBuf, expected: u64, found: u64 },

    #[error("item count mismatch: {images} images vs {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error("malformed record stream in {path}: length {len} is not a multiple of record size {record}")]
    MalformedRecord { path: PathBuf, len: u64, record: usize },

    #[error("{path}: {extra} trailing bytes after the last record")]
    TrailingBytes { path: PathBuf, extra: u64 },

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("subset selection produced no examples")]
    EmptySubset,

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("pace exposes no examples at step {step}")]
    EmptyExposure { step: usize },

    #[error("exposed prefix of {prefix} examples at step {step} is smaller than batch size {batch}")]
    PrefixTooSmall { step: usize, prefix: usize, batch: usize },

    #[error("non-finite input")]
    NonFinite,

    #[error("training diverged at step {step} (loss = {loss})")]
    Diverged { step: usize, loss: f64 },

    #[error("current weights coincide with the reference optimum")]
    AtOptimum,

    #[error("zero variance input")]
    ZeroVariance,

    #[error("architecture mismatch: {0}")]
    ArchitectureMismatch(String),

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("csv error: {0}")]
    Csv(String),

    #[error("missing input: {0}")]
    MissingInput(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
