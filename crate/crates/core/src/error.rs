use std::io;

use thiserror::Error;

/// Errors produced by the paper2vec library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    /// A text input line could not be parsed.
    #[error("{what}, line {line}: {msg}")]
    Parse {
        what: &'static str,
        line: usize,
        msg: String,
    },

    /// A binary file had an unexpected layout.
    #[error("bad {what} file: {msg}")]
    Format { what: &'static str, msg: String },

    #[error("unknown document: {0}")]
    UnknownDocument(String),

    #[error("no embedding for document {0}")]
    NoEmbedding(String),

    #[error("no context mass; graph has no edges")]
    NoContextMass,

    #[error("non-finite gradient at epoch {epoch} for entry ({source_index}, {context_index})")]
    NonFiniteGradient {
        epoch: usize,
        source_index: usize,
        context_index: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("conflicting gold scores for pair ({a}, {b}): {first} vs {second}")]
    GoldConflict {
        a: String,
        b: String,
        first: f64,
        second: f64,
    },

    #[error("no evaluable queries")]
    NoEvaluableQueries,

    #[error("all ranking lists are empty")]
    EmptyRankings,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(what: &'static str, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            what,
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn format(what: &'static str, msg: impl Into<String>) -> Self {
        Error::Format {
            what,
            msg: msg.into(),
        }
    }
}
