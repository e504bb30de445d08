//! Recursive-descent parser for the trigger DSL.
//!
//! `parse` returns every `TRIGGER` block in source order. On a syntax error
//! it reports the expected tokens, then recovers at the next `TRIGGER`
//! keyword so one file can yield several diagnostics.

use crate::dsl::ast::{Arg, AtomicExpr, PredicateCall, TriggerAst};
use crate::dsl::diagnostic::{ParseDiagnostic, Span};
use crate::dsl::lexer::tokenize;
use crate::dsl::token::{Token, TokenKind};
use crate::value::{CompareOp, Value};

/// Parses a source file into its trigger blocks.
pub fn parse(source: &str) -> Result<Vec<TriggerAst>, Vec<ParseDiagnostic>> {
    let tokens = tokenize(source).map_err(|d| vec![d])?;
    let mut parser = Parser { tokens, pos: 0 };
    let mut triggers = Vec::new();
    let mut diagnostics = Vec::new();

    while !parser.at_end() {
        let start = parser.pos;
        match parser.trigger() {
            Ok(t) => triggers.push(t),
            Err(d) => {
                diagnostics.push(d);
                parser.recover(start);
            }
        }
    }

    if diagnostics.is_empty() {
        Ok(triggers)
    } else {
        Err(diagnostics)
    }
}

/// Parses a source expected to contain exactly one trigger.
pub fn parse_one(source: &str) -> Result<TriggerAst, Vec<ParseDiagnostic>> {
    let mut triggers = parse(source)?;
    if triggers.len() == 1 {
        Ok(triggers.remove(0))
    } else {
        Err(vec![ParseDiagnostic::error(
            format!("expected exactly one trigger, found {}", triggers.len()),
            1,
            1,
            Span::default(),
        )])
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn advance(&mut self) -> Option<Token> {
        let token = self.tokens.get(self.pos).cloned();
        if token.is_some() {
            self.pos += 1;
        }
        token
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek().is_some_and(|t| &t.kind == kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// Skips to the next top-level `TRIGGER` keyword, consuming at least one
    /// token if the failed attempt consumed none (guarantees progress).
    fn recover(&mut self, attempt_start: usize) {
        if self.pos == attempt_start && !self.at_end() {
            self.pos += 1;
        }
        while let Some(t) = self.peek() {
            if t.kind == TokenKind::Trigger {
                return;
            }
            self.pos += 1;
        }
    }

    fn error(&self, expected: &str) -> ParseDiagnostic {
        match self.peek() {
            Some(t) => ParseDiagnostic::error(
                format!("expected {expected}, found {}", t.kind),
                t.line,
                t.column,
                t.span,
            ),
            None => {
                let (line, column, span) = self
                    .tokens
                    .last()
                    .map(|t| (t.line, t.column, t.span))
                    .unwrap_or((1, 1, Span::default()));
                ParseDiagnostic::error(
                    format!("expected {expected}, found end of input"),
                    line,
                    column,
                    span,
                )
            }
        }
    }

    fn expect(&mut self, kind: TokenKind, expected: &str) -> Result<Token, ParseDiagnostic> {
        if self.peek().is_some_and(|t| t.kind == kind) {
            Ok(self.advance().expect("peeked"))
        } else {
            Err(self.error(expected))
        }
    }

    fn expect_ident(&mut self, expected: &str) -> Result<(String, Token), ParseDiagnostic> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Ident(_),
                ..
            }) => {
                let token = self.advance().expect("peeked");
                let TokenKind::Ident(name) = &token.kind else {
                    unreachable!()
                };
                Ok((name.clone(), token))
            }
            _ => Err(self.error(expected)),
        }
    }

    fn expect_value(&mut self) -> Result<Value, ParseDiagnostic> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Literal(_),
                ..
            }) => {
                let token = self.advance().expect("peeked");
                let TokenKind::Literal(value) = token.kind else {
                    unreachable!()
                };
                Ok(value)
            }
            _ => Err(self.error("a value (string, number, or boolean)")),
        }
    }

    fn trigger(&mut self) -> Result<TriggerAst, ParseDiagnostic> {
        self.expect(TokenKind::Trigger, "'TRIGGER'")?;
        let (name, _) = self.expect_ident("trigger name")?;

        let mut specs: Vec<(String, Value)> = Vec::new();
        if self.eat(&TokenKind::LParen) {
            loop {
                let (key, key_token) = self.expect_ident("spec key")?;
                if specs.iter().any(|(k, _)| *k == key) {
                    return Err(ParseDiagnostic::error(
                        format!("duplicate spec key '{key}'"),
                        key_token.line,
                        key_token.column,
                        key_token.span,
                    ));
                }
                self.expect(TokenKind::Comparator(CompareOp::Eq), "'=' after spec key")?;
                let value = self.expect_value()?;
                specs.push((key, value));
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
            self.expect(TokenKind::RParen, "')' or ','")?;
        }

        self.expect(TokenKind::LBrace, "'{'")?;

        let mut body: Vec<AtomicExpr> = Vec::new();
        loop {
            match self.peek().map(|t| &t.kind) {
                Some(TokenKind::Not) | Some(TokenKind::Predicate) => {
                    let atomic = self.atomic_expr(&body)?;
                    body.push(atomic);
                }
                Some(TokenKind::RBrace) if body.is_empty() => {
                    return Err(self.error("at least one predicate"));
                }
                Some(TokenKind::RBrace) => break,
                _ if body.is_empty() => return Err(self.error("'NOT' or 'PREDICATE'")),
                _ => return Err(self.error("'NOT', 'PREDICATE', or '}'")),
            }
        }
        self.expect(TokenKind::RBrace, "'}'")?;

        Ok(TriggerAst { name, specs, body })
    }

    fn atomic_expr(&mut self, previous: &[AtomicExpr]) -> Result<AtomicExpr, ParseDiagnostic> {
        let negated = self.eat(&TokenKind::Not);
        self.expect(TokenKind::Predicate, "'PREDICATE'")?;
        self.expect(TokenKind::LParen, "'('")?;
        let (ptype, _) = self.expect_ident("predicate type")?;

        let mut args: Vec<Arg> = Vec::new();
        while self.eat(&TokenKind::Comma) {
            args.push(self.arg(&args)?);
        }
        self.expect(TokenKind::RParen, "')' or ','")?;

        let alias = if self.eat(&TokenKind::As) {
            let (alias, token) = self.expect_ident("alias identifier")?;
            if previous.iter().any(|a| a.alias.as_deref() == Some(&alias)) {
                return Err(ParseDiagnostic::error(
                    format!("duplicate alias '{alias}'"),
                    token.line,
                    token.column,
                    token.span,
                ));
            }
            Some(alias)
        } else {
            None
        };

        Ok(AtomicExpr {
            negated,
            predicate: PredicateCall { ptype, args },
            alias,
        })
    }

    fn arg(&mut self, previous: &[Arg]) -> Result<Arg, ParseDiagnostic> {
        match self.peek().map(|t| t.kind.clone()) {
            Some(TokenKind::Literal(_)) => Ok(Arg::Positional(self.expect_value()?)),
            Some(TokenKind::Comparator(op)) => {
                let token = self.advance().expect("peeked");
                if previous.iter().any(|a| matches!(a, Arg::Comparator(..))) {
                    return Err(ParseDiagnostic::error(
                        "multiple comparator expressions in one predicate call",
                        token.line,
                        token.column,
                        token.span,
                    ));
                }
                let value = self.expect_value()?;
                Ok(Arg::Comparator(op, value))
            }
            Some(TokenKind::Ident(_)) => {
                let (key, key_token) = self.expect_ident("argument name")?;
                if previous.iter().any(|a| matches!(a, Arg::Named(k, _) if *k == key)) {
                    return Err(ParseDiagnostic::error(
                        format!("duplicate argument '{key}'"),
                        key_token.line,
                        key_token.column,
                        key_token.span,
                    ));
                }
                self.expect(
                    TokenKind::Comparator(CompareOp::Eq),
                    "'=' after argument name",
                )?;
                let value = self.expect_value()?;
                Ok(Arg::Named(key, value))
            }
            _ => Err(self.error("an argument (value, name=value, or comparator value)")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(source: &str) -> TriggerAst {
        parse_one(source).unwrap()
    }

    #[test]
    fn person_trigger_with_frequency_spec() {
        let ast = one(r#"TRIGGER t (frequency=2) { PREDICATE(detect, class="person") }"#);
        assert_eq!(ast.name, "t");
        assert_eq!(ast.specs, vec![("frequency".into(), Value::Int(2))]);
        assert_eq!(ast.body.len(), 1);
        let atomic = &ast.body[0];
        assert!(!atomic.negated);
        assert_eq!(atomic.alias, None);
        assert_eq!(atomic.predicate.ptype, "detect");
        assert_eq!(
            atomic.predicate.args,
            vec![Arg::Named("class".into(), Value::str("person"))]
        );
    }

    #[test]
    fn not_sets_negated() {
        let ast = one(r#"TRIGGER t { NOT PREDICATE(detect, class="train") }"#);
        assert!(ast.body[0].negated);
    }

    #[test]
    fn empty_body_is_rejected() {
        let errs = parse("TRIGGER t { }").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert!(errs[0].message.contains("expected at least one predicate"));
    }

    #[test]
    fn alias_and_count_pipeline() {
        let ast = one(concat!(
            "TRIGGER cars {\n",
            "  PREDICATE(detect, class=\"car\") AS c\n",
            "  PREDICATE(count, on=\"c\", operator=\">\", value=5)\n",
            "}\n"
        ));
        assert_eq!(ast.body[0].alias.as_deref(), Some("c"));
        let count = &ast.body[1].predicate;
        assert_eq!(count.named("on"), Some(&Value::str("c")));
        assert_eq!(count.named("operator"), Some(&Value::str(">")));
        assert_eq!(count.named("value"), Some(&Value::Int(5)));
    }

    #[test]
    fn comparator_expression_argument() {
        let ast = one(r#"TRIGGER t { PREDICATE(value_compare, on="speed", > 13.9) }"#);
        let call = &ast.body[0].predicate;
        assert_eq!(call.comparator(), Some((CompareOp::Gt, &Value::Float(13.9))));
    }

    #[test]
    fn multiple_comparators_rejected() {
        let errs = parse(r#"TRIGGER t { PREDICATE(value_compare, > 1, < 2) }"#).unwrap_err();
        assert!(errs[0].message.contains("multiple comparator expressions"));
    }

    #[test]
    fn duplicate_named_argument_rejected() {
        let errs = parse(r#"TRIGGER t { PREDICATE(detect, class="a", class="b") }"#).unwrap_err();
        assert!(errs[0].message.contains("duplicate argument 'class'"));
    }

    #[test]
    fn duplicate_spec_key_rejected() {
        let errs = parse(r#"TRIGGER t (frequency=1, frequency=2) { PREDICATE(detect) }"#)
            .unwrap_err();
        assert!(errs[0].message.contains("duplicate spec key 'frequency'"));
    }

    #[test]
    fn duplicate_alias_rejected() {
        let errs = parse(concat!(
            "TRIGGER t {\n",
            "  PREDICATE(detect, class=\"car\") AS x\n",
            "  PREDICATE(detect, class=\"bus\") AS x\n",
            "}\n"
        ))
        .unwrap_err();
        assert!(errs[0].message.contains("duplicate alias 'x'"));
    }

    #[test]
    fn multiple_triggers_in_source_order() {
        let asts = parse(concat!(
            "TRIGGER a { PREDICATE(detect, class=\"car\") }\n",
            "TRIGGER b { PREDICATE(detect, class=\"bus\") }\n"
        ))
        .unwrap();
        assert_eq!(asts.len(), 2);
        assert_eq!(asts[0].name, "a");
        assert_eq!(asts[1].name, "b");
    }

    #[test]
    fn recovery_reports_multiple_errors() {
        let errs = parse(concat!(
            "TRIGGER one { }\n",
            "TRIGGER two { PREDICATE(detect, class=\"ok\") }\n",
            "TRIGGER three { PREDICATE() }\n"
        ))
        .unwrap_err();
        assert_eq!(errs.len(), 2);
        assert!(errs[0].message.contains("at least one predicate"));
        assert!(errs[1].message.contains("predicate type"));
    }

    #[test]
    fn error_reports_expected_set_and_position() {
        let errs = parse("TRIGGER t PREDICATE").unwrap_err();
        assert!(errs[0].message.contains("expected '{'"));
        assert_eq!(errs[0].line, 1);
        assert_eq!(errs[0].column, 11);
    }

    #[test]
    fn garbage_input_yields_diagnostics_not_panic() {
        assert!(parse("detect } ( TRIGGER").is_err());
        assert!(parse("").unwrap().is_empty());
    }
}
