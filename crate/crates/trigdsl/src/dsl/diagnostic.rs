//! Source-located diagnostics shared by the lexer and the parser.

use std::fmt;

/// Byte range of the offending token within the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub offset: usize,
    pub len: usize,
}

impl Span {
    pub fn new(offset: usize, len: usize) -> Self {
        Span { offset, len }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => f.write_str("error"),
            Severity::Warning => f.write_str("warning"),
        }
    }
}

/// A lexical or syntactic problem. Line and column are 1-based and point at
/// the start of the offending token; `span` covers its bytes.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{severity} at line {line}, column {column}: {message}")]
pub struct ParseDiagnostic {
    pub severity: Severity,
    pub message: String,
    pub line: u32,
    pub column: u32,
    pub span: Span,
}

impl ParseDiagnostic {
    pub fn error(message: impl Into<String>, line: u32, column: u32, span: Span) -> Self {
        ParseDiagnostic {
            severity: Severity::Error,
            message: message.into(),
            line,
            column,
            span,
        }
    }
}
