use std::path::PathBuf;

/// Errors produced anywhere in the simulation, estimation and dataset pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("slot {slot} out of range (realization has {n_slots} slots)")]
    SlotOutOfRange { slot: usize, n_slots: usize },
    #[error("matrix is singular: {0}")]
    Singular(&'static str),
    #[error("bad magic bytes {found:02x?}")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated data in sequence {sequence}")]
    Truncated { sequence: usize },
    #[error("checksum mismatch in sequence {sequence}: stored {stored:08x}, computed {computed:08x}")]
    Checksum {
        sequence: usize,
        stored: u32,
        computed: u32,
    },
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error("digest mismatch: expected {expected}, found {found}")]
    DigestMismatch { expected: String, found: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
