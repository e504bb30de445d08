//! Canonical pretty-printer: one predicate per line, two-space indent.
//!
//! The output re-parses to a structurally equal AST, which is what makes the
//! printed form canonical — two equal ASTs always print identically.

use std::fmt::Write as _;

use crate::dsl::ast::{Arg, TriggerAst};

pub fn pretty_print(ast: &TriggerAst) -> String {
    let mut out = String::new();
    out.push_str("TRIGGER ");
    out.push_str(&ast.name);

    if !ast.specs.is_empty() {
        out.push_str(" (");
        for (i, (key, value)) in ast.specs.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "{key}={value}");
        }
        out.push(')');
    }

    out.push_str(" {\n");
    for atomic in &ast.body {
        out.push_str("  ");
        if atomic.negated {
            out.push_str("NOT ");
        }
        out.push_str("PREDICATE(");
        out.push_str(&atomic.predicate.ptype);
        for arg in &atomic.predicate.args {
            match arg {
                Arg::Positional(v) => {
                    let _ = write!(out, ", {v}");
                }
                Arg::Named(k, v) => {
                    let _ = write!(out, ", {k}={v}");
                }
                Arg::Comparator(op, v) => {
                    let _ = write!(out, ", {op} {v}");
                }
            }
        }
        out.push(')');
        if let Some(alias) = &atomic.alias {
            let _ = write!(out, " AS {alias}");
        }
        out.push('\n');
    }
    out.push_str("}\n");
    out
}
