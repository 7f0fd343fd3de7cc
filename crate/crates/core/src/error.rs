use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at byte {offset}: {msg}")]
    Parse { offset: u64, msg: String },

    #[error("tensor '{tensor}' data range {start}..{end} exceeds blob of {len} bytes")]
    Bounds {
        tensor: String,
        start: u64,
        end: u64,
        len: u64,
    },

    #[error("model contains no FP16/BF16 tensors{}", skipped_note(.skipped))]
    EmptyModel { skipped: Vec<String> },

    #[error("no tensor matches selection '{0}'")]
    EmptySelection(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("hardware constraint violated: {0}")]
    Constraint(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("corrupt bitstream: {0}")]
    Corruption(String),

    #[error("format error at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },

    #[error("symbol {symbol} has no codeword")]
    MissingSymbol { symbol: u16 },

    #[error("empty symbol stream")]
    EmptyStream,
}

fn skipped_note(skipped: &[String]) -> String {
    if skipped.is_empty() {
        String::new()
    } else {
        format!(" (skipped: {})", skipped.join(", "))
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(offset: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            offset: offset as u64,
            msg: msg.into(),
        }
    }

    /// Process exit code for the command-line tool.
    ///
    /// 2 = bad input, 3 = integrity or hardware-constraint violation. A
    /// malformed HFLC file counts as damaged, not as bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::Bounds { .. }
            | Error::EmptyModel { .. }
            | Error::EmptySelection(_)
            | Error::Config(_) => 2,
            Error::Format { .. }
            | Error::Constraint(_)
            | Error::Integrity(_)
            | Error::Corruption(_)
            | Error::MissingSymbol { .. }
            | Error::EmptyStream => 3,
        }
    }
}
