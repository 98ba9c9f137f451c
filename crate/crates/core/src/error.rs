use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("invalid shift: {0}")]
    InvalidShift(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("decode error: {0}")]
    Decode(String),

    #[error("rate target unreachable: {0}")]
    Rate(String),

    #[error("external codec failed: {message}")]
    ExternalCodec {
        message: String,
        /// Captured stderr/stdout of the failing tool, if any.
        diagnostics: String,
    },

    #[error("invalid subset: {0}")]
    InvalidSubset(String),

    #[error("container error: {0}")]
    Container(String),

    /// Codec failure inside the optimizer, tagged with where it happened.
    #[error("iteration {iteration}, packet {packet}: {source}")]
    Optimizer {
        iteration: usize,
        packet: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
