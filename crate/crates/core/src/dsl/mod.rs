//! The C-RASP language: syntax tree, textual format, validation and desugaring.

mod ast;
pub mod builder;
mod desugar;
mod lexer;
mod parser;
mod printer;
mod validate;

use std::fmt;

pub use ast::*;
pub use builder::ProgramBuilder;
pub use desugar::desugar;
pub use parser::parse;
pub use printer::print;
pub use validate::{is_valid_name, KEYWORDS};

/// Source location of a statement (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

fn loc_prefix(loc: &Option<Location>) -> String {
    loc.map(|l| format!("{l}: ")).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DslError {
    #[error("{line}:{col}: syntax error, expected {expected}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
    },
    #[error("{}sort error in `{op}`: expected {expected}, found {found}", loc_prefix(.at))]
    Sort {
        op: String,
        expected: Sort,
        found: Sort,
        at: Option<Location>,
    },
    #[error("{}unknown reference `{reference}` in `{op}`", loc_prefix(.at))]
    UnknownReference {
        op: String,
        reference: String,
        at: Option<Location>,
    },
    #[error("{}duplicate operation name `{op}`", loc_prefix(.at))]
    DuplicateName { op: String, at: Option<Location> },
    #[error("reserved symbol {0:?} may not appear in the alphabet")]
    ReservedSymbol(String),
    #[error("invalid alphabet: {0}")]
    Alphabet(AlphabetError),
    #[error("{}invalid operation name `{name}`", loc_prefix(.at))]
    InvalidName { name: String, at: Option<Location> },
    #[error("{}invalid relation in `{op}`: {reason}", loc_prefix(.at))]
    InvalidRelation {
        op: String,
        reason: String,
        at: Option<Location>,
    },
    #[error("program has no Boolean operation")]
    NoBooleanOp,
    #[error("accept target `{name}`: {reason}")]
    InvalidAccept { name: String, reason: String },
    #[error("predict entry for {symbol:?}: {reason}")]
    InvalidPredict { symbol: String, reason: String },
}

impl DslError {
    pub fn location(&self) -> Option<Location> {
        match self {
            DslError::Syntax { line, col, .. } => Some(Location {
                line: *line,
                col: *col,
            }),
            DslError::Sort { at, .. }
            | DslError::UnknownReference { at, .. }
            | DslError::DuplicateName { at, .. }
            | DslError::InvalidName { at, .. }
            | DslError::InvalidRelation { at, .. } => *at,
            _ => None,
        }
    }
}

impl From<AlphabetError> for DslError {
    fn from(e: AlphabetError) -> Self {
        match e {
            AlphabetError::Reserved => DslError::ReservedSymbol(SOS.to_string()),
            other => DslError::Alphabet(other),
        }
    }
}
