//! Statement language: lexer, parser, canonical printer and translation of
//! the sugar statements into core query forms.

pub mod ast;
pub mod lexer;
mod parser;
mod translate;

use std::fmt;

use thiserror::Error;

pub use ast::*;
pub use lexer::{line_col, split_statements};
pub use parser::parse;
pub use translate::{translate_entity, translate_metadata, METADATA_FILTER_KEYS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct SyntaxError {
    /// 1-based.
    pub line: usize,
    /// 1-based, in characters.
    pub column: usize,
    /// Byte offset into the parsed text.
    pub offset: usize,
    pub expected: Vec<String>,
    pub found: String,
    /// Extra detail, e.g. from the path expression compiler.
    pub message: Option<String>,
}

impl SyntaxError {
    pub(crate) fn at(text: &str, offset: usize, expected: &[&str], found: &str) -> Self {
        let (line, column) = line_col(text, offset);
        Self {
            line,
            column,
            offset,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: found.to_string(),
            message: None,
        }
    }

    /// Re-anchors the position for a statement that starts at `base` in
    /// the larger `text`.
    pub fn relocate(mut self, text: &str, base: usize) -> Self {
        self.offset += base;
        let (line, column) = line_col(text, self.offset);
        self.line = line;
        self.column = column;
        self
    }
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: ", self.line, self.column)?;
        if let Some(msg) = &self.message {
            return f.write_str(msg);
        }
        match self.expected.as_slice() {
            [] => f.write_str("unexpected input")?,
            [one] => write!(f, "expected {one}")?,
            many => write!(f, "expected one of {}", many.join(", "))?,
        }
        if !self.found.is_empty() {
            write!(f, ", found {}", self.found)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("unknown metadata filter key '{0}' (expected one of what, how, when, who, where, which, why)")]
    UnknownFilterKey(String),
}
