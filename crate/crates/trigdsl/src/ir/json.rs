//! Canonical JSON serialization of the IR.
//!
//! Writing emits keys in the fixed order — trigger: type, name, spec,
//! predicates (then extras); predicate: type, on, target, comparison, args,
//! store_as, not (then extras) — with two-space indentation. Reading accepts
//! any key order, preserves unknown fields in `extras`, and normalizes a
//! scalar `args.positional` into a one-element array.

use indexmap::IndexMap;
use serde_json::{json, Map, Value as Json};

use crate::ir::{Comparison, IrCode, IrDiagnostic, PredicateIr, TriggerIr};
use crate::value::Value;

pub fn to_json(ir: &TriggerIr) -> String {
    let mut out = serde_json::to_string_pretty(&to_json_value(ir))
        .expect("IR serialization cannot fail");
    out.push('\n');
    out
}

pub fn to_json_value(ir: &TriggerIr) -> Json {
    let mut root = Map::new();
    root.insert("type".into(), json!("trigger"));
    root.insert("name".into(), json!(ir.name));
    if !ir.spec.is_empty() {
        let mut spec = Map::new();
        for (k, v) in &ir.spec {
            spec.insert(k.clone(), v.to_json());
        }
        root.insert("spec".into(), Json::Object(spec));
    }
    root.insert(
        "predicates".into(),
        Json::Array(ir.predicates.iter().map(predicate_to_json).collect()),
    );
    for (k, v) in &ir.extras {
        root.insert(k.clone(), v.clone());
    }
    Json::Object(root)
}

fn predicate_to_json(pred: &PredicateIr) -> Json {
    let mut obj = Map::new();
    obj.insert("type".into(), json!(pred.ptype));
    if let Some(on) = &pred.on {
        obj.insert("on".into(), json!(on));
    }
    if let Some(target) = &pred.target {
        let mut t = Map::new();
        for (k, v) in target {
            t.insert(k.clone(), v.to_json());
        }
        obj.insert("target".into(), Json::Object(t));
    }
    if let Some(cmp) = &pred.comparison {
        obj.insert(
            "comparison".into(),
            json!({"operator": cmp.operator, "value": cmp.value.to_json()}),
        );
    }
    if !pred.args.is_empty() {
        let mut a = Map::new();
        for (k, v) in &pred.args {
            a.insert(k.clone(), v.clone());
        }
        obj.insert("args".into(), Json::Object(a));
    }
    if let Some(store_as) = &pred.store_as {
        obj.insert("store_as".into(), json!(store_as));
    }
    if pred.not {
        obj.insert("not".into(), json!(true));
    }
    for (k, v) in &pred.extras {
        obj.insert(k.clone(), v.clone());
    }
    Json::Object(obj)
}

pub fn from_json(text: &str) -> Result<TriggerIr, IrDiagnostic> {
    let raw: Json = serde_json::from_str(text).map_err(|e| {
        IrDiagnostic::error(IrCode::MalformedJson, "/", format!("malformed JSON: {e}"))
    })?;
    from_json_value(&raw)
}

pub fn from_json_value(raw: &Json) -> Result<TriggerIr, IrDiagnostic> {
    let Some(root) = raw.as_object() else {
        return Err(IrDiagnostic::error(
            IrCode::RootNotObject,
            "/",
            "the trigger document root must be a JSON object",
        ));
    };

    match root.get("type") {
        Some(Json::String(s)) if s == "trigger" => {}
        Some(other) => {
            return Err(IrDiagnostic::error(
                IrCode::WrongType,
                "/type",
                format!("'type' must be the string \"trigger\", got {other}"),
            ));
        }
        None => {
            return Err(IrDiagnostic::error(
                IrCode::MissingField,
                "/type",
                "missing required field 'type'",
            ));
        }
    }

    let name = match root.get("name") {
        Some(Json::String(s)) => s.clone(),
        Some(other) => {
            return Err(IrDiagnostic::error(
                IrCode::WrongType,
                "/name",
                format!("'name' must be a string, got {other}"),
            ));
        }
        None => {
            return Err(IrDiagnostic::error(
                IrCode::MissingField,
                "/name",
                "missing required field 'name'",
            ));
        }
    };

    let spec = match root.get("spec") {
        None => IndexMap::new(),
        Some(Json::Object(obj)) => {
            let mut spec = IndexMap::new();
            for (k, v) in obj {
                let value = Value::from_json(v).ok_or_else(|| {
                    IrDiagnostic::error(
                        IrCode::WrongType,
                        format!("/spec/{k}"),
                        "spec values must be scalars",
                    )
                })?;
                spec.insert(k.clone(), value);
            }
            spec
        }
        Some(other) => {
            return Err(IrDiagnostic::error(
                IrCode::WrongType,
                "/spec",
                format!("'spec' must be an object, got {other}"),
            ));
        }
    };

    let predicates = match root.get("predicates") {
        Some(Json::Array(list)) => {
            let mut predicates = Vec::with_capacity(list.len());
            for (i, item) in list.iter().enumerate() {
                predicates.push(predicate_from_json(item, i)?);
            }
            predicates
        }
        Some(other) => {
            return Err(IrDiagnostic::error(
                IrCode::WrongType,
                "/predicates",
                format!("'predicates' must be an array, got {other}"),
            ));
        }
        None => {
            return Err(IrDiagnostic::error(
                IrCode::MissingField,
                "/predicates",
                "missing required field 'predicates'",
            ));
        }
    };

    let mut extras = IndexMap::new();
    for (k, v) in root {
        if !matches!(k.as_str(), "type" | "name" | "spec" | "predicates") {
            extras.insert(k.clone(), v.clone());
        }
    }

    Ok(TriggerIr {
        name,
        spec,
        predicates,
        extras,
    })
}

fn predicate_from_json(raw: &Json, index: usize) -> Result<PredicateIr, IrDiagnostic> {
    let path = |suffix: &str| format!("/predicates/{index}{suffix}");
    let Some(obj) = raw.as_object() else {
        return Err(IrDiagnostic::error(
            IrCode::WrongType,
            path(""),
            "each predicate must be a JSON object",
        ));
    };

    let ptype = match obj.get("type") {
        Some(Json::String(s)) => s.clone(),
        Some(other) => {
            return Err(IrDiagnostic::error(
                IrCode::WrongType,
                path("/type"),
                format!("'type' must be a string, got {other}"),
            ));
        }
        None => {
            return Err(IrDiagnostic::error(
                IrCode::MissingField,
                path("/type"),
                "missing required field 'type'",
            ));
        }
    };
    let mut pred = PredicateIr::new(ptype);

    if let Some(on) = obj.get("on") {
        match on {
            Json::String(s) => pred.on = Some(s.clone()),
            other => {
                return Err(IrDiagnostic::error(
                    IrCode::WrongType,
                    path("/on"),
                    format!("'on' must be a string, got {other}"),
                ));
            }
        }
    }

    if let Some(target) = obj.get("target") {
        let Some(map) = target.as_object() else {
            return Err(IrDiagnostic::error(
                IrCode::WrongType,
                path("/target"),
                "'target' must be an object",
            ));
        };
        let mut t = IndexMap::new();
        for (k, v) in map {
            let value = Value::from_json(v).ok_or_else(|| {
                IrDiagnostic::error(
                    IrCode::WrongType,
                    path(&format!("/target/{k}")),
                    "target values must be scalars",
                )
            })?;
            t.insert(k.clone(), value);
        }
        pred.target = Some(t);
    }

    if let Some(cmp) = obj.get("comparison") {
        pred.comparison = Some(comparison_from_json(cmp, &path("/comparison"))?);
    }

    if let Some(args) = obj.get("args") {
        let Some(map) = args.as_object() else {
            return Err(IrDiagnostic::error(
                IrCode::WrongType,
                path("/args"),
                "'args' must be an object",
            ));
        };
        for (k, v) in map {
            let stored = match v {
                Json::Array(items) => {
                    for (j, item) in items.iter().enumerate() {
                        if Value::from_json(item).is_none() {
                            return Err(IrDiagnostic::error(
                                IrCode::WrongType,
                                path(&format!("/args/{k}/{j}")),
                                "arg arrays must hold scalars",
                            ));
                        }
                    }
                    v.clone()
                }
                scalar if Value::from_json(scalar).is_some() => {
                    if k == "positional" {
                        // Normalize: positional is always an array.
                        Json::Array(vec![scalar.clone()])
                    } else {
                        scalar.clone()
                    }
                }
                other => {
                    return Err(IrDiagnostic::error(
                        IrCode::WrongType,
                        path(&format!("/args/{k}")),
                        format!("arg '{k}' must be a scalar or an array of scalars, got {other}"),
                    ));
                }
            };
            pred.args.insert(k.clone(), stored);
        }
    }

    if let Some(store_as) = obj.get("store_as") {
        match store_as {
            Json::String(s) => pred.store_as = Some(s.clone()),
            other => {
                return Err(IrDiagnostic::error(
                    IrCode::WrongType,
                    path("/store_as"),
                    format!("'store_as' must be a string, got {other}"),
                ));
            }
        }
    }

    if let Some(not) = obj.get("not") {
        match not {
            Json::Bool(b) => pred.not = *b,
            other => {
                return Err(IrDiagnostic::error(
                    IrCode::WrongType,
                    path("/not"),
                    format!("'not' must be a boolean, got {other}"),
                ));
            }
        }
    }

    const KNOWN: [&str; 7] = ["type", "on", "target", "comparison", "args", "store_as", "not"];
    for (k, v) in obj {
        if !KNOWN.contains(&k.as_str()) {
            pred.extras.insert(k.clone(), v.clone());
        }
    }

    Ok(pred)
}

fn comparison_from_json(raw: &Json, path: &str) -> Result<Comparison, IrDiagnostic> {
    let Some(obj) = raw.as_object() else {
        return Err(IrDiagnostic::error(
            IrCode::WrongType,
            path,
            "'comparison' must be an object",
        ));
    };
    let operator = match obj.get("operator") {
        Some(Json::String(s)) => s.clone(),
        Some(other) => {
            return Err(IrDiagnostic::error(
                IrCode::WrongType,
                format!("{path}/operator"),
                format!("'operator' must be a string, got {other}"),
            ));
        }
        None => {
            return Err(IrDiagnostic::error(
                IrCode::MissingField,
                format!("{path}/operator"),
                "comparison needs an 'operator'",
            ));
        }
    };
    let value = match obj.get("value") {
        Some(v) => Value::from_json(v).ok_or_else(|| {
            IrDiagnostic::error(
                IrCode::WrongType,
                format!("{path}/value"),
                "comparison 'value' must be a scalar",
            )
        })?,
        None => {
            return Err(IrDiagnostic::error(
                IrCode::MissingField,
                format!("{path}/value"),
                "comparison needs a 'value'",
            ));
        }
    };
    for key in obj.keys() {
        if key != "operator" && key != "value" {
            return Err(IrDiagnostic::error(
                IrCode::UnmappedField,
                format!("{path}/{key}"),
                format!("comparison has no field '{key}'"),
            ));
        }
    }
    Ok(Comparison { operator, value })
}
