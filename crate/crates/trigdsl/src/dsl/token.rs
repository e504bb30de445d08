//! Token stream produced by the lexer.

use std::fmt;

use crate::dsl::diagnostic::Span;
use crate::value::{CompareOp, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    /// Keyword `TRIGGER`.
    Trigger,
    /// Keyword `PREDICATE`.
    Predicate,
    /// Keyword `NOT`.
    Not,
    /// Keyword `AS`.
    As,
    Ident(String),
    /// String, number, or boolean literal.
    Literal(Value),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    /// A comparator; `=` doubles as the named-argument assignment sign.
    Comparator(CompareOp),
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Trigger => f.write_str("'TRIGGER'"),
            TokenKind::Predicate => f.write_str("'PREDICATE'"),
            TokenKind::Not => f.write_str("'NOT'"),
            TokenKind::As => f.write_str("'AS'"),
            TokenKind::Ident(name) => write!(f, "identifier '{name}'"),
            TokenKind::Literal(v) => write!(f, "literal {v}"),
            TokenKind::LParen => f.write_str("'('"),
            TokenKind::RParen => f.write_str("')'"),
            TokenKind::LBrace => f.write_str("'{'"),
            TokenKind::RBrace => f.write_str("'}'"),
            TokenKind::Comma => f.write_str("','"),
            TokenKind::Comparator(op) => write!(f, "'{op}'"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: u32,
    pub column: u32,
    pub span: Span,
}
