use std::fmt;

use thiserror::Error;

use crate::sexp::SourceLocation;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ErrorKind {
    #[error("unbalanced parentheses")]
    UnbalancedParens,
    #[error("unterminated element name (missing '}}')")]
    UnterminatedBrace,
    #[error("unterminated string")]
    UnterminatedString,
    #[error("bad atom `{0}`")]
    BadAtom(String),
    #[error("unknown form head `{0}`")]
    UnknownHead(String),
    #[error("unresolved element reference {{{0}}}")]
    UnresolvedElementRef(String),
    #[error("{head} expects {expected} arguments, got {got}")]
    Arity {
        head: String,
        expected: &'static str,
        got: usize,
    },
    #[error("{0}")]
    BadForm(String),
    #[error("assertion failed: {0}")]
    AssertionFailed(String),
    #[error(transparent)]
    Kb(#[from] score_core::Error),
    #[error("cannot read {0}")]
    Io(String),
}

/// A parse or evaluation error, located in the source when possible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Error {
    pub kind: ErrorKind,
    pub location: Option<SourceLocation>,
}

impl Error {
    pub fn at(kind: ErrorKind, loc: SourceLocation) -> Self {
        Error {
            kind,
            location: Some(loc),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.location {
            Some(loc) => write!(f, "{loc}: {}", self.kind),
            None => write!(f, "{}", self.kind),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T, E = Error> = std::result::Result<T, E>;
