use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: dimension mismatch, {left} vs {right}")]
    Shape {
        context: &'static str,
        left: String,
        right: String,
    },

    #[error("{0}: empty input")]
    Empty(&'static str),

    #[error("batch norm in train mode needs at least 2 columns, got {0}")]
    SingleColumnBatch(usize),

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("training loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("bad magic in {path}: expected {expected:?}, found {found:?}")]
    BadMagic {
        path: String,
        expected: [u8; 4],
        found: [u8; 4],
    },

    #[error("unsupported format version {found} in {path} (expected {expected})")]
    UnsupportedVersion {
        path: String,
        expected: u32,
        found: u32,
    },

    #[error("truncated file {path}: {what}")]
    Truncated { path: String, what: &'static str },

    #[error("no records in {0}")]
    NoRecords(String),

    #[error("feature dimension mismatch: expected {expected}, file has {found}")]
    FeatureDimMismatch { expected: usize, found: usize },

    #[error("unknown image id {0:?}")]
    UnknownImage(String),

    #[error("question {qid:?} has {got} choices, need at least 2")]
    TooFewChoices { qid: String, got: usize },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("operation requires variant {expected}, model is {found}")]
    VariantMismatch {
        expected: &'static str,
        found: String,
    },

    #[error("annotated region union has zero area")]
    DegenerateAnnotation,
}

impl Error {
    /// True for failures of the numbers themselves rather than of the data
    /// feeding them (drives the CLI's exit-code split).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. } | Error::NonFiniteLoss { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
