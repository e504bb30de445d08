//! AST → IR compilation.
//!
//! Field mapping: header specs → `spec`; predicate type → `type`; the named
//! arg `class` of `detect` → `target.class`; `on` → `on`; a comparator
//! expression or the named pair `operator=`/`value=` → `comparison`; bare
//! positional values → `args.positional`; every other named arg → `args`;
//! `AS x` → `store_as`; `NOT` → `not: true`. Total on parser output.

use indexmap::IndexMap;

use crate::dsl::{Arg, AtomicExpr, TriggerAst};
use crate::ir::{Comparison, PredicateIr, TriggerIr};
use crate::value::Value;

pub fn compile(ast: &TriggerAst) -> TriggerIr {
    TriggerIr {
        name: ast.name.clone(),
        spec: ast.specs.iter().cloned().collect(),
        predicates: ast.body.iter().map(compile_atomic).collect(),
        extras: IndexMap::new(),
    }
}

fn compile_atomic(atomic: &AtomicExpr) -> PredicateIr {
    let call = &atomic.predicate;
    let mut pred = PredicateIr::new(call.ptype.clone());
    pred.store_as = atomic.alias.clone();
    pred.not = atomic.negated;

    // A bare comparator expression always forms the comparison. Otherwise
    // the named pair operator=<string>/value=<scalar> does; the pair is only
    // consumed as a whole, and only when the operator value is a string.
    if let Some((op, value)) = call.comparator() {
        pred.comparison = Some(Comparison {
            operator: op.as_str().to_string(),
            value: value.clone(),
        });
    }
    let pair_forms_comparison = pred.comparison.is_none()
        && matches!(call.named("operator"), Some(Value::Str(_)))
        && call.named("value").is_some();
    if pair_forms_comparison {
        let Some(Value::Str(operator)) = call.named("operator") else {
            unreachable!()
        };
        pred.comparison = Some(Comparison {
            operator: operator.clone(),
            value: call.named("value").expect("checked").clone(),
        });
    }

    for arg in &call.args {
        match arg {
            Arg::Comparator(..) => {} // consumed above
            Arg::Positional(v) => push_positional(&mut pred.args, v),
            Arg::Named(key, v) => match key.as_str() {
                "operator" | "value" if pair_forms_comparison => {} // consumed above
                "on" => pred.on = Some(v.canonical_text()),
                "class" if call.ptype == "detect" => {
                    pred.target
                        .get_or_insert_with(IndexMap::new)
                        .insert("class".to_string(), v.clone());
                }
                "positional" => push_positional(&mut pred.args, v),
                _ => {
                    pred.args.insert(key.clone(), v.to_json());
                }
            },
        }
    }

    pred
}

fn push_positional(args: &mut IndexMap<String, serde_json::Value>, value: &Value) {
    let list = args
        .entry("positional".to_string())
        .or_insert_with(|| serde_json::Value::Array(Vec::new()));
    list.as_array_mut()
        .expect("positional is always an array")
        .push(value.to_json());
}
