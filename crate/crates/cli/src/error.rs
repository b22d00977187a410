use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}, column {col}: cannot parse {value:?} as a number")]
    Parse { line: u64, col: usize, value: String },

    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRows { line: u64, expected: usize, found: usize },

    #[error("no data rows")]
    EmptyFile,

    #[error("csv: {0}")]
    Csv(String),

    #[error("unsupported model document version {found:?}, expected {expected:?}")]
    SchemaVersionMismatch { found: String, expected: &'static str },

    #[error("model document: {0}")]
    Document(String),

    #[error(transparent)]
    Core(#[from] biarch_core::Error),
}

pub type Result<T> = std::result::Result<T, IoError>;

impl IoError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn doc(msg: impl Into<String>) -> Self {
        IoError::Document(msg.into())
    }
}
