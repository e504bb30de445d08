//! Lexer, recursive-descent parser, and canonical pretty-printer for the
//! trigger DSL.
//!
//! Grammar summary: `TRIGGER <name> [(k=v, ...)] { <atomic>+ }` where each
//! atomic expression is `[NOT] PREDICATE(<type>[, args...]) [AS alias]` and
//! juxtaposition of atomic expressions means logical AND. Everything here is
//! pure and thread-safe.

pub mod ast;
pub mod diagnostic;
pub mod lexer;
pub mod parser;
pub mod printer;
mod token;

pub use ast::{Arg, AtomicExpr, PredicateCall, TriggerAst};
pub use diagnostic::{ParseDiagnostic, Severity, Span};
pub use lexer::{is_identifier, tokenize};
pub use parser::{parse, parse_one};
pub use printer::pretty_print;
pub use token::{Token, TokenKind};
