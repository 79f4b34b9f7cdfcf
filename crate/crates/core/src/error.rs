use std::fmt;

use thiserror::Error;

/// A syntax or well-formedness error with its source position (1-based).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical(char),
    Unexpected { found: String, expected: String },
    UnknownConstant(String),
    Category(String),
    DuplicateDefinition(String),
    DuplicateMain,
    MissingMain,
    TauDeclaredHigh,
    InvalidHighName(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Lexical(c) => write!(f, "unexpected character {c:?}"),
            ParseErrorKind::Unexpected { found, expected } => {
                write!(f, "found {found}, expected {expected}")
            }
            ParseErrorKind::UnknownConstant(c) => write!(f, "constant {c} has no definition"),
            ParseErrorKind::Category(msg) => write!(f, "category violation: {msg}"),
            ParseErrorKind::DuplicateDefinition(c) => write!(f, "constant {c} defined twice"),
            ParseErrorKind::DuplicateMain => f.write_str("main defined twice"),
            ParseErrorKind::MissingMain => f.write_str("no `main :=` line"),
            ParseErrorKind::TauDeclaredHigh => f.write_str("tau cannot be declared high"),
            ParseErrorKind::InvalidHighName(n) => write!(f, "{n} is not an action name"),
        }
    }
}

/// Violations of the specification invariants on programmatically built values.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("constant {0} has no definition")]
    UnknownConstant(String),
    #[error("body of {0} is not a guarded process")]
    UnguardedBody(String),
    #[error("term {0} is not a CFM parallel process")]
    Category(String),
    #[error("tau cannot be declared high")]
    TauDeclaredHigh,
    #[error("action {0} is classified inconsistently with the high set")]
    Misclassified(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetError {
    #[error("transition {0} is not enabled")]
    NotEnabled(usize),
    #[error("state space exceeds the limit of {0} markings")]
    StateLimit(usize),
    #[error("malformed net: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquivalenceError {
    #[error("net has {places} places; the naive fixpoint is limited to {limit}")]
    TooLarge { places: usize, limit: usize },
}
