//! Hand-written lexer for the trigger DSL.
//!
//! Keywords are case-sensitive and uppercase; identifiers match
//! `[A-Za-z_][A-Za-z0-9_]*`; numbers are decimal (no exponent form); strings
//! are double-quoted with `\"` and `\\` escapes. Whitespace and `//` line
//! comments are discarded.

use std::iter::Peekable;
use std::str::CharIndices;

use crate::dsl::diagnostic::{ParseDiagnostic, Span};
use crate::dsl::token::{Token, TokenKind};
use crate::value::{CompareOp, Value};

/// Splits `source` into tokens. Stops at the first lexical error.
pub fn tokenize(source: &str) -> Result<Vec<Token>, ParseDiagnostic> {
    Lexer::new(source).run()
}

/// True when `text` lexes as a single identifier token: `[A-Za-z_][A-Za-z0-9_]*`
/// and not a keyword or boolean literal.
pub fn is_identifier(text: &str) -> bool {
    let mut chars = text.chars();
    let Some(first) = chars.next() else {
        return false;
    };
    (first.is_ascii_alphabetic() || first == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !matches!(text, "TRIGGER" | "PREDICATE" | "NOT" | "AS" | "true" | "false")
}

struct Lexer<'a> {
    source: &'a str,
    chars: Peekable<CharIndices<'a>>,
    line: u32,
    column: u32,
}

impl<'a> Lexer<'a> {
    fn new(source: &'a str) -> Self {
        Lexer {
            source,
            chars: source.char_indices().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn run(mut self) -> Result<Vec<Token>, ParseDiagnostic> {
        let mut tokens = Vec::new();
        loop {
            self.skip_trivia();
            let (line, column) = (self.line, self.column);
            let Some(&(start, c)) = self.chars.peek() else {
                return Ok(tokens);
            };

            let kind = match c {
                '(' => self.single(TokenKind::LParen),
                ')' => self.single(TokenKind::RParen),
                '{' => self.single(TokenKind::LBrace),
                '}' => self.single(TokenKind::RBrace),
                ',' => self.single(TokenKind::Comma),
                '=' => self.single(TokenKind::Comparator(CompareOp::Eq)),
                '<' | '>' => {
                    self.bump();
                    if matches!(self.chars.peek(), Some((_, '='))) {
                        return Err(ParseDiagnostic::error(
                            format!(
                                "comparator '{c}=' is not in the grammar; use '{c}' (comparators are =, !=, <, >)"
                            ),
                            line,
                            column,
                            Span::new(start, 2),
                        ));
                    }
                    if c == '<' {
                        TokenKind::Comparator(CompareOp::Lt)
                    } else {
                        TokenKind::Comparator(CompareOp::Gt)
                    }
                }
                '!' => {
                    self.bump();
                    if matches!(self.chars.peek(), Some((_, '='))) {
                        self.bump();
                        TokenKind::Comparator(CompareOp::Ne)
                    } else {
                        return Err(ParseDiagnostic::error(
                            "illegal character '!' (did you mean '!='?)",
                            line,
                            column,
                            Span::new(start, 1),
                        ));
                    }
                }
                '"' => self.string(start, line, column)?,
                c if c.is_ascii_digit() => self.number(start, line, column)?,
                '-' => {
                    self.bump();
                    match self.chars.peek() {
                        Some((_, d)) if d.is_ascii_digit() => self.number(start, line, column)?,
                        _ => {
                            return Err(ParseDiagnostic::error(
                                "illegal character '-' (a minus sign must start a number)",
                                line,
                                column,
                                Span::new(start, 1),
                            ));
                        }
                    }
                }
                c if c.is_ascii_alphabetic() || c == '_' => self.word(start),
                other => {
                    return Err(ParseDiagnostic::error(
                        format!("illegal character '{other}'"),
                        line,
                        column,
                        Span::new(start, other.len_utf8()),
                    ));
                }
            };

            let end = self.offset();
            tokens.push(Token {
                kind,
                line,
                column,
                span: Span::new(start, end - start),
            });
        }
    }

    /// Byte offset of the next unconsumed character (or end of input).
    fn offset(&mut self) -> usize {
        self.chars
            .peek()
            .map(|&(i, _)| i)
            .unwrap_or(self.source.len())
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn single(&mut self, kind: TokenKind) -> TokenKind {
        self.bump();
        kind
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.chars.peek() {
                Some((_, c)) if c.is_whitespace() => {
                    self.bump();
                }
                Some(&(i, '/')) if self.source[i..].starts_with("//") => {
                    while matches!(self.chars.peek(), Some((_, c)) if *c != '\n') {
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn string(
        &mut self,
        start: usize,
        line: u32,
        column: u32,
    ) -> Result<TokenKind, ParseDiagnostic> {
        self.bump(); // opening quote
        let mut text = String::new();
        loop {
            match self.bump() {
                Some('"') => return Ok(TokenKind::Literal(Value::Str(text))),
                Some('\\') => match self.bump() {
                    Some('"') => text.push('"'),
                    Some('\\') => text.push('\\'),
                    Some(other) => {
                        return Err(ParseDiagnostic::error(
                            format!("unsupported escape '\\{other}' in string"),
                            line,
                            column,
                            Span::new(start, self.offset() - start),
                        ));
                    }
                    None => break,
                },
                Some(c) => text.push(c),
                None => break,
            }
        }
        Err(ParseDiagnostic::error(
            "unterminated string",
            line,
            column,
            Span::new(start, self.source.len() - start),
        ))
    }

    fn number(
        &mut self,
        start: usize,
        line: u32,
        column: u32,
    ) -> Result<TokenKind, ParseDiagnostic> {
        while matches!(self.chars.peek(), Some((_, c)) if c.is_ascii_digit()) {
            self.bump();
        }
        let mut is_float = false;
        if matches!(self.chars.peek(), Some((_, '.'))) {
            self.bump();
            is_float = true;
            if !matches!(self.chars.peek(), Some((_, c)) if c.is_ascii_digit()) {
                return Err(ParseDiagnostic::error(
                    "expected digit after decimal point",
                    line,
                    column,
                    Span::new(start, self.offset() - start),
                ));
            }
            while matches!(self.chars.peek(), Some((_, c)) if c.is_ascii_digit()) {
                self.bump();
            }
        }

        let text = &self.source[start..self.offset()];
        let value = if is_float {
            text.parse::<f64>().ok().map(Value::Float)
        } else {
            text.parse::<i64>().ok().map(Value::Int)
        };
        match value {
            Some(v) => Ok(TokenKind::Literal(v)),
            None => Err(ParseDiagnostic::error(
                format!("number '{text}' out of range"),
                line,
                column,
                Span::new(start, text.len()),
            )),
        }
    }

    fn word(&mut self, start: usize) -> TokenKind {
        while matches!(self.chars.peek(), Some((_, c)) if c.is_ascii_alphanumeric() || *c == '_') {
            self.bump();
        }
        let text = &self.source[start..self.offset()];
        match text {
            "TRIGGER" => TokenKind::Trigger,
            "PREDICATE" => TokenKind::Predicate,
            "NOT" => TokenKind::Not,
            "AS" => TokenKind::As,
            "true" => TokenKind::Literal(Value::Bool(true)),
            "false" => TokenKind::Literal(Value::Bool(false)),
            _ => TokenKind::Ident(text.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(source: &str) -> Vec<TokenKind> {
        tokenize(source)
            .unwrap()
            .into_iter()
            .map(|t| t.kind)
            .collect()
    }

    #[test]
    fn single_predicate_trigger_is_twelve_tokens() {
        let tokens = kinds(r#"TRIGGER t1 { PREDICATE(detect, class="person") }"#);
        assert_eq!(tokens.len(), 12);
        assert_eq!(tokens[0], TokenKind::Trigger);
        assert_eq!(tokens[1], TokenKind::Ident("t1".into()));
        assert_eq!(tokens[9], TokenKind::Literal(Value::str("person")));
        assert_eq!(tokens[11], TokenKind::RBrace);
    }

    #[test]
    fn count_comparison_literals() {
        let tokens = kinds(r#"PREDICATE(count, on="p", operator=">", value=5)"#);
        assert!(tokens.contains(&TokenKind::Literal(Value::str("p"))));
        assert!(tokens.contains(&TokenKind::Literal(Value::str(">"))));
        assert!(tokens.contains(&TokenKind::Literal(Value::Int(5))));
    }

    #[test]
    fn unterminated_string_reports_opening_position() {
        let err = tokenize(r#""unterminated"#).unwrap_err();
        assert_eq!(err.line, 1);
        assert_eq!(err.column, 1);
        assert!(err.message.contains("unterminated string"));
    }

    #[test]
    fn keywords_are_case_sensitive() {
        assert_eq!(kinds("trigger"), vec![TokenKind::Ident("trigger".into())]);
        assert_eq!(kinds("TRIGGER"), vec![TokenKind::Trigger]);
    }

    #[test]
    fn le_ge_rejected_with_suggestion() {
        let err = tokenize("PREDICATE(value_compare, <= 5)").unwrap_err();
        assert!(err.message.contains("use '<'"), "{}", err.message);
        let err = tokenize(">= 1").unwrap_err();
        assert!(err.message.contains("use '>'"), "{}", err.message);
    }

    #[test]
    fn comments_and_whitespace_are_discarded() {
        let tokens = kinds("// header comment\nTRIGGER t // trailing\n{ }");
        assert_eq!(
            tokens,
            vec![
                TokenKind::Trigger,
                TokenKind::Ident("t".into()),
                TokenKind::LBrace,
                TokenKind::RBrace,
            ]
        );
    }

    #[test]
    fn numbers_are_decimal_only() {
        assert_eq!(
            kinds("1.5"),
            vec![TokenKind::Literal(Value::Float(1.5))]
        );
        assert_eq!(
            kinds("-3"),
            vec![TokenKind::Literal(Value::Int(-3))]
        );
        // No exponent form: lexes as a number followed by an identifier.
        assert_eq!(
            kinds("1e5"),
            vec![
                TokenKind::Literal(Value::Int(1)),
                TokenKind::Ident("e5".into()),
            ]
        );
        assert!(tokenize("1.").unwrap_err().message.contains("decimal point"));
    }

    #[test]
    fn line_and_column_tracking() {
        let tokens = tokenize("TRIGGER t\n  { }").unwrap();
        assert_eq!((tokens[0].line, tokens[0].column), (1, 1));
        assert_eq!((tokens[1].line, tokens[1].column), (1, 9));
        assert_eq!((tokens[2].line, tokens[2].column), (2, 3));
    }

    #[test]
    fn string_escapes() {
        assert_eq!(
            kinds(r#""a\"b\\c""#),
            vec![TokenKind::Literal(Value::str(r#"a"b\c"#))]
        );
        let err = tokenize(r#""a\n""#).unwrap_err();
        assert!(err.message.contains("unsupported escape"));
    }

    #[test]
    fn illegal_character() {
        let err = tokenize("TRIGGER t @").unwrap_err();
        assert!(err.message.contains("illegal character '@'"));
        assert_eq!(err.column, 11);
    }
}
