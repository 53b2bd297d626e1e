use alloc::string::String;
use core::fmt;

/// Errors produced by the core library.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// `build_vocab` was given no lines.
    EmptyCorpus,
    /// A token id outside the vocabulary was decoded.
    IdOutOfRange(u32),
    /// `align_token` was called on two different tokens.
    AlignMismatch,
    /// `merge_all` was called without any pieces.
    NoPieces,
    /// Source sequence (plus the length token) exceeds `max_len`.
    SourceTooLong { len: usize, max: usize },
    /// Target sequence exceeds `max_len`.
    TargetTooLong { len: usize, max: usize },
    /// Loss or gradient became non-finite.
    NumericalDivergence,
    /// Checkpoint payload does not match its checksum.
    ChecksumMismatch,
    /// Checkpoint version tag is not supported.
    UnsupportedVersion(u32),
    /// Checkpoint is structurally invalid.
    MalformedCheckpoint(String),
    /// A configuration value violates its invariant.
    InvalidConfig(String),
    /// Empty training corpus or batch.
    EmptyBatch,
    /// Parallel inputs of different lengths.
    LengthMismatch { left: usize, right: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyCorpus => f.write_str("empty corpus"),
            Error::IdOutOfRange(id) => write!(f, "id out of range: {id}"),
            Error::AlignMismatch => f.write_str("align on unequal tokens"),
            Error::NoPieces => f.write_str("no pieces"),
            Error::SourceTooLong { len, max } => {
                write!(f, "source too long: {len} positions, limit {max}")
            }
            Error::TargetTooLong { len, max } => {
                write!(f, "target too long: {len} positions, limit {max}")
            }
            Error::NumericalDivergence => f.write_str("numerical divergence"),
            Error::ChecksumMismatch => f.write_str("checksum mismatch"),
            Error::UnsupportedVersion(v) => write!(f, "unsupported checkpoint version {v}"),
            Error::MalformedCheckpoint(why) => write!(f, "malformed checkpoint: {why}"),
            Error::InvalidConfig(why) => write!(f, "invalid config: {why}"),
            Error::EmptyBatch => f.write_str("empty batch"),
            Error::LengthMismatch { left, right } => {
                write!(f, "length mismatch: {left} vs {right} lines")
            }
        }
    }
}

impl core::error::Error for Error {}
