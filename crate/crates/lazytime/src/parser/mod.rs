//! Concrete syntax for programs (`.imp`) and specifications (`.spec`).
//!
//! Programs use `:=`, `if c then S [else S] fi`, `while c do S od spec NAME`,
//! `print e`, `ok`, `stop`, with `;` between statements. Specifications are
//! `name = predicate` definitions whose name starts in column 1; a
//! predicate may continue over indented lines. Comments run from `#` to the
//! end of the line.

mod lexer;
mod pretty;
mod program;
mod spec;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::ast::{Stmt, Universe};
use crate::predicate::Predicate;

pub use pretty::{pretty_print, Pretty};

/// Position of a token or node: 1-based line and column, byte offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub start: usize,
    pub end: usize,
}

impl SourceSpan {
    pub fn join(self, other: SourceSpan) -> SourceSpan {
        SourceSpan {
            end: other.end.max(self.end),
            ..self
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{span}: syntax error: {message}")]
    Syntax { message: String, span: SourceSpan },
    #[error("{span}: `{name}` is neither a program variable nor bound by a quantifier")]
    UnboundQuantifierVariable { name: String, span: SourceSpan },
    #[error("{span}: `{name}` is defined twice")]
    DuplicateDefinition { name: String, span: SourceSpan },
    #[error("{span}: `stop` may only end the program")]
    StopNotLast { span: SourceSpan },
}

impl ParseError {
    pub(crate) fn syntax(message: impl Into<String>, span: SourceSpan) -> ParseError {
        ParseError::Syntax {
            message: message.into(),
            span,
        }
    }

    pub fn span(&self) -> SourceSpan {
        match self {
            ParseError::Syntax { span, .. }
            | ParseError::UnboundQuantifierVariable { span, .. }
            | ParseError::DuplicateDefinition { span, .. }
            | ParseError::StopNotLast { span } => *span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub message: String,
    pub span: SourceSpan,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: warning: {}", self.span, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedProgram {
    pub program: Stmt,
    pub warnings: Vec<Warning>,
}

pub(crate) const KEYWORDS: &[&str] = &[
    "ok", "stop", "print", "if", "then", "else", "fi", "while", "do", "od", "spec", "true",
    "false", "need", "forall", "exists", "max", "inf", "t",
];

pub(crate) fn is_keyword(name: &str) -> bool {
    KEYWORDS.contains(&name)
}

/// Parses a whole program. A missing final `stop` is appended.
pub fn parse_program(text: &str) -> Result<Stmt, ParseError> {
    parse_program_with_warnings(text).map(|p| p.program)
}

/// Like [`parse_program`], also reporting the inserted `stop`.
pub fn parse_program_with_warnings(text: &str) -> Result<ParsedProgram, ParseError> {
    program::parse(text)
}

/// Parses a specification file into its named predicates.
pub fn parse_spec(text: &str) -> Result<BTreeMap<String, Predicate>, ParseError> {
    spec::parse_file(text, None)
}

/// Like [`parse_spec`], also rejecting plain names that are neither
/// scalars of `u` nor quantifier-bound.
pub fn parse_spec_in(text: &str, u: &Universe) -> Result<BTreeMap<String, Predicate>, ParseError> {
    spec::parse_file(text, Some(u))
}

/// Parses a single predicate, such as a timing claim.
pub fn parse_predicate(text: &str) -> Result<Predicate, ParseError> {
    spec::parse_single(text, None)
}

pub fn parse_predicate_in(text: &str, u: &Universe) -> Result<Predicate, ParseError> {
    spec::parse_single(text, Some(u))
}
