use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),

    #[error("unsupported audio encoding in {}: {detail}", .path.display())]
    UnsupportedEncoding { path: PathBuf, detail: String },

    #[error("corrupt WAV header in {}: {detail}", .path.display())]
    CorruptHeader { path: PathBuf, detail: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("length mismatch: {left} values vs {right} labels")]
    LengthMismatch { left: usize, right: usize },

    #[error("labels contain a single class; need at least one positive and one negative")]
    SingleClass,

    #[error("malformed annotation at line {line}: {detail}")]
    MalformedAnnotation { line: usize, detail: String },

    #[error("invalid interval [{start_s}, {end_s}]: end must be greater than start")]
    InvalidInterval { start_s: f64, end_s: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid synthesis spec: {0}")]
    InvalidSpec(String),

    #[error("bouts overlap: [{0}, {1}] and [{2}, {3}]")]
    OverlappingBouts(f64, f64, f64, f64),

    #[error("bout [{start_s}, {end_s}] lies outside the {total_s} s clip")]
    BoutOutsideClip { start_s: f64, end_s: f64, total_s: f64 },
}

impl Error {
    /// True for failures caused by the filesystem or file contents rather than
    /// by analysis preconditions.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::NotFound(_)
                | Error::UnsupportedEncoding { .. }
                | Error::CorruptHeader { .. }
                | Error::Io(_)
                | Error::MalformedAnnotation { .. }
        )
    }
}
