//! Parse tree of a trigger specification.

use crate::value::{CompareOp, Value};

/// One `TRIGGER <name> [(k=v, ...)] { ... }` block.
#[derive(Debug, Clone, PartialEq)]
pub struct TriggerAst {
    pub name: String,
    /// Header spec entries in source order; keys are unique.
    pub specs: Vec<(String, Value)>,
    /// Condition expression: one or more atomic expressions, conjunction by
    /// juxtaposition.
    pub body: Vec<AtomicExpr>,
}

/// One `[NOT] PREDICATE(...) [AS alias]` line.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicExpr {
    pub negated: bool,
    pub predicate: PredicateCall,
    pub alias: Option<String>,
}

/// `PREDICATE(<ptype> [, args...])`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredicateCall {
    pub ptype: String,
    /// Arguments in source order; named keys are unique and at most one
    /// comparator expression is present.
    pub args: Vec<Arg>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Arg {
    Positional(Value),
    Named(String, Value),
    /// Bare comparator form, e.g. `> 5`.
    Comparator(CompareOp, Value),
}

impl PredicateCall {
    pub fn named(&self, key: &str) -> Option<&Value> {
        self.args.iter().find_map(|arg| match arg {
            Arg::Named(k, v) if k == key => Some(v),
            _ => None,
        })
    }

    pub fn comparator(&self) -> Option<(CompareOp, &Value)> {
        self.args.iter().find_map(|arg| match arg {
            Arg::Comparator(op, v) => Some((*op, v)),
            _ => None,
        })
    }
}
