use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}: invalid UTF-8")]
    Decode { path: PathBuf, line: usize },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("corpus `{0}` is empty")]
    EmptyCorpus(String),

    #[error("no word reaches the frequency threshold {0}")]
    EmptyVocabulary(u64),

    #[error("duplicate word `{0}`")]
    DuplicateWord(String),

    #[error("tagged form `{0}` collides with an existing vocabulary word")]
    TagCollision(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("corpus `{0}` yields no training pairs")]
    NoPairs(String),

    #[error("zero vector: {0}")]
    ZeroVector(String),

    #[error("the two spaces share no vocabulary")]
    EmptySharedVocabulary,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("singular value decomposition failed")]
    Svd,

    #[error("word `{0}` not found")]
    MissingWord(String),

    #[error("neighbour pool for `{word}` has {available} words, need at least {k}")]
    NeighbourPool {
        word: String,
        available: usize,
        k: usize,
    },

    #[error("need at least {needed} entries, found {found}")]
    TooFewEntries { needed: usize, found: usize },

    #[error("need at least {needed} overlapping words, found {found}; missing: {}", missing.join(", "))]
    InsufficientOverlap {
        needed: usize,
        found: usize,
        missing: Vec<String>,
    },

    #[error("infeasible synthetic spec: {0}")]
    Infeasible(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
