use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error("unsupported dtype tag {0}")]
    UnsupportedDtype(u8),

    #[error("unknown {what} tag {tag}")]
    UnknownTag { what: &'static str, tag: u8 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("truncated payload: needed {needed} more bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },

    #[error("{0} trailing bytes after payload")]
    TrailingBytes(usize),

    #[error("non-finite value in layer {layer}")]
    NonFinite { layer: usize },

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("selected neuron subset is empty")]
    EmptySubset,

    #[error("pattern {k} requested but only {rank} available")]
    RankExceeded { k: usize, rank: usize },

    #[error("unsupported activation {0} for the masked chain product")]
    UnsupportedActivation(&'static str),

    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }
}
