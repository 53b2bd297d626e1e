use std::io;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),
    #[error("corpus length mismatch: {source_lines} source lines, {target_lines} target lines")]
    CorpusMismatch { source_lines: usize, target_lines: usize },
    #[error("{}:{line}: malformed JSON: {message}", path.display())]
    Json { path: PathBuf, line: usize, message: String },
    #[error("{}:{line}: {message}", path.display())]
    Config { path: PathBuf, line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Core(#[from] lat_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        let path = path.into();
        if source.kind() == io::ErrorKind::NotFound {
            Error::NotFound(path)
        } else {
            Error::Io { path, source }
        }
    }

    /// Process exit status: 1 when training diverges, 2 for bad input of any kind.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Core(lat_core::Error::NumericalDivergence) => 1,
            _ => 2,
        }
    }
}
