use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid UTF-8 at byte offset {offset}{}", line_suffix(*line))]
    Decode { line: Option<usize>, offset: usize },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Stream(#[from] io::Error),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown configuration key `{key}`{}", line_suffix(*line))]
    UnknownConfigKey { key: String, line: Option<usize> },

    #[error("invalid value `{value}` for `{key}`: {reason}")]
    InvalidConfigValue {
        key: String,
        value: String,
        reason: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric instability: non-finite value at training step {step}")]
    NumericInstability { step: u64 },

    #[error("empty corpus: {0}")]
    EmptyCorpus(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate word `{word}` at line {line}")]
    DuplicateWord { word: String, line: usize },

    #[error("cannot store word `{0}`: words must not contain whitespace")]
    WhitespaceInWord(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("correlation undefined: ranks of one input have zero variance")]
    UndefinedCorrelation,

    #[error("duplicate category `{0}`")]
    DuplicateCategory(String),

    #[error("invalid analogy question: {0}")]
    InvalidQuestion(String),

    #[error("word `{word}` not found{}", suggestions_suffix(suggestions))]
    UnknownWord {
        word: String,
        suggestions: Vec<String>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// Attach a path to a bare parse error so messages point at the file.
    pub(crate) fn in_file(self, path: &std::path::Path) -> Self {
        match self {
            Error::Parse { line, message } => Error::Parse {
                line,
                message: format!("{}: {message}", path.display()),
            },
            Error::Stream(source) => Error::io(path, source),
            other => other,
        }
    }

    /// Process exit status for this error: 1 for domain failures, 2 for
    /// input and configuration problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::UnknownWord { .. }
            | Error::NumericInstability { .. }
            | Error::UndefinedCorrelation
            | Error::Domain(_) => 1,
            _ => 2,
        }
    }
}

fn line_suffix(line: Option<usize>) -> String {
    line.map(|l| format!(" (line {l})")).unwrap_or_default()
}

fn suggestions_suffix(suggestions: &[String]) -> String {
    if suggestions.is_empty() {
        String::new()
    } else {
        format!("; did you mean: {}", suggestions.join(", "))
    }
}
