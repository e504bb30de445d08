//! IR → AST decompilation, the inverse of `compile`.
//!
//! Canonical argument order per predicate: positional values, `on`, the
//! detect target class, the comparison, then remaining args. A comparison
//! renders as the named pair `operator=".."/value=..` (the canonical surface
//! form) unless `args` already holds an `operator` or `value` key, in which
//! case the bare comparator form is used so the pair round-trips into `args`.

use crate::dsl::{is_identifier, Arg, AtomicExpr, PredicateCall, TriggerAst};
use crate::ir::{IrCode, IrDiagnostic, PredicateIr, TriggerIr};
use crate::value::{CompareOp, Value};

/// Renders IR back to an AST. Fields with no DSL surface form produce
/// diagnostics instead of silently lossy output.
pub fn decompile(ir: &TriggerIr) -> Result<TriggerAst, Vec<IrDiagnostic>> {
    let mut diags = Vec::new();

    for key in ir.extras.keys() {
        diags.push(IrDiagnostic::error(
            IrCode::UnmappedField,
            format!("/{key}"),
            format!("field '{key}' has no DSL surface form"),
        ));
    }
    if !is_identifier(&ir.name) {
        diags.push(IrDiagnostic::error(
            IrCode::InvalidIdentifier,
            "/name",
            format!("'{}' is not a valid identifier", ir.name),
        ));
    }
    for key in ir.spec.keys() {
        if !is_identifier(key) {
            diags.push(IrDiagnostic::error(
                IrCode::InvalidIdentifier,
                format!("/spec/{key}"),
                format!("spec key '{key}' is not a valid identifier"),
            ));
        }
    }
    if ir.predicates.is_empty() {
        diags.push(IrDiagnostic::error(
            IrCode::EmptyPredicates,
            "/predicates",
            "a trigger needs at least one predicate",
        ));
    }

    let mut body = Vec::new();
    let mut seen_aliases: Vec<&str> = Vec::new();
    for (i, pred) in ir.predicates.iter().enumerate() {
        if let Some(alias) = pred.store_as.as_deref() {
            if seen_aliases.contains(&alias) {
                diags.push(IrDiagnostic::error(
                    IrCode::DuplicateStoreAs,
                    format!("/predicates/{i}/store_as"),
                    format!("store_as '{alias}' is used twice"),
                ));
            } else {
                seen_aliases.push(alias);
            }
        }
        if let Some(atomic) = decompile_predicate(pred, i, &mut diags) {
            body.push(atomic);
        }
    }

    if diags.iter().any(IrDiagnostic::is_error) {
        return Err(diags);
    }
    Ok(TriggerAst {
        name: ir.name.clone(),
        specs: ir.spec.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
        body,
    })
}

fn decompile_predicate(
    pred: &PredicateIr,
    index: usize,
    diags: &mut Vec<IrDiagnostic>,
) -> Option<AtomicExpr> {
    let path = |suffix: &str| format!("/predicates/{index}{suffix}");
    let before = diags.len();

    for key in pred.extras.keys() {
        diags.push(IrDiagnostic::error(
            IrCode::UnmappedField,
            path(&format!("/{key}")),
            format!("field '{key}' has no DSL surface form"),
        ));
    }
    if !is_identifier(&pred.ptype) {
        diags.push(IrDiagnostic::error(
            IrCode::InvalidIdentifier,
            path("/type"),
            format!("'{}' is not a valid identifier", pred.ptype),
        ));
    }
    if let Some(alias) = &pred.store_as {
        if !is_identifier(alias) {
            diags.push(IrDiagnostic::error(
                IrCode::InvalidIdentifier,
                path("/store_as"),
                format!("'{alias}' is not a valid identifier"),
            ));
        }
    }

    let mut args: Vec<Arg> = Vec::new();

    // Positional values first.
    if let Some(positional) = pred.args.get("positional") {
        match positional.as_array() {
            Some(list) => {
                for (j, item) in list.iter().enumerate() {
                    match Value::from_json(item) {
                        Some(v) => args.push(Arg::Positional(v)),
                        None => diags.push(IrDiagnostic::error(
                            IrCode::UnmappedField,
                            path(&format!("/args/positional/{j}")),
                            "positional values must be scalars",
                        )),
                    }
                }
            }
            None => diags.push(IrDiagnostic::error(
                IrCode::WrongType,
                path("/args/positional"),
                "'positional' must be an array of scalars",
            )),
        }
    }

    if let Some(on) = &pred.on {
        args.push(Arg::Named("on".to_string(), Value::str(on.clone())));
    }
    if pred.args.contains_key("on") {
        diags.push(IrDiagnostic::error(
            IrCode::ReservedArgName,
            path("/args/on"),
            "'on' belongs at the predicate level, not inside args",
        ));
    }

    match &pred.target {
        Some(target) if pred.ptype == "detect" => {
            for (key, value) in target {
                if key == "class" {
                    args.push(Arg::Named("class".to_string(), value.clone()));
                } else {
                    diags.push(IrDiagnostic::error(
                        IrCode::UnmappedField,
                        path(&format!("/target/{key}")),
                        format!("target key '{key}' has no DSL surface form"),
                    ));
                }
            }
            if pred.args.contains_key("class") {
                diags.push(IrDiagnostic::error(
                    IrCode::ReservedArgName,
                    path("/args/class"),
                    "'class' of detect belongs in target, not args",
                ));
            }
        }
        Some(_) => diags.push(IrDiagnostic::error(
            IrCode::UnmappedField,
            path("/target"),
            format!("'{}' does not use a target", pred.ptype),
        )),
        None => {}
    }

    // Comparison: named pair unless args already claims those key names.
    let collision = pred.args.contains_key("operator") || pred.args.contains_key("value");
    match &pred.comparison {
        Some(cmp) if !collision => {
            args.push(Arg::Named(
                "operator".to_string(),
                Value::str(cmp.operator.clone()),
            ));
            args.push(Arg::Named("value".to_string(), cmp.value.clone()));
        }
        Some(cmp) => match CompareOp::parse(&cmp.operator) {
            Some(op) => args.push(Arg::Comparator(op, cmp.value.clone())),
            None => diags.push(IrDiagnostic::error(
                IrCode::IllegalOperator,
                path("/comparison/operator"),
                format!("'{}' is not one of =, !=, <, >", cmp.operator),
            )),
        },
        None => {
            if matches!(pred.args.get("operator"), Some(serde_json::Value::String(_)))
                && pred.args.contains_key("value")
            {
                diags.push(IrDiagnostic::error(
                    IrCode::ReservedArgName,
                    path("/args/operator"),
                    "args 'operator' and 'value' together would re-compile into a comparison",
                ));
            }
        }
    }

    // Remaining args in map order.
    for (key, value) in &pred.args {
        if key == "positional" || key == "on" || (key == "class" && pred.ptype == "detect") {
            continue;
        }
        if !is_identifier(key) {
            diags.push(IrDiagnostic::error(
                IrCode::InvalidIdentifier,
                path(&format!("/args/{key}")),
                format!("arg key '{key}' is not a valid identifier"),
            ));
            continue;
        }
        match Value::from_json(value) {
            Some(v) => args.push(Arg::Named(key.clone(), v)),
            None => diags.push(IrDiagnostic::error(
                IrCode::UnmappedField,
                path(&format!("/args/{key}")),
                format!("arg '{key}' is not a scalar"),
            )),
        }
    }

    if diags.len() > before {
        return None;
    }
    Some(AtomicExpr {
        negated: pred.not,
        predicate: PredicateCall {
            ptype: pred.ptype.clone(),
            args,
        },
        alias: pred.store_as.clone(),
    })
}
