//! The built-in predicate implementations.

use std::sync::Arc;

use crate::ir::PredicateIr;
use crate::predicates::{
    ArgKind, ArgSpec, ComparisonRule, EvalError, EvalRequest, InputKind, OutputKind, Payload,
    PredicateInput, PredicateRegistry, PredicateSignature, PredicateValue, RegistryError,
};
use crate::value::{compare, CompareOp, Value};

/// Color palette understood by the `color` predicate. Detections without a
/// `color` attribute count as "other".
pub const COLOR_PALETTE: [&str; 7] = [
    "red", "green", "yellow", "blue", "white", "black", "other",
];

/// Region names understood by the `regional` predicate: vertical thirds of
/// the image (full height), or the whole frame.
pub const REGION_NAMES: [&str; 4] = ["front", "left", "right", "full"];

/// Default confidence / score / overlap threshold shared by detect,
/// attribute, and regional.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

pub(crate) fn register_all(registry: &mut PredicateRegistry) -> Result<(), RegistryError> {
    let choices = |options: &[&str]| ArgKind::Choice(options.iter().map(|s| s.to_string()).collect());

    registry.register(
        "detect",
        PredicateSignature {
            input: InputKind::Image,
            output: OutputKind::Set,
            required: vec![ArgSpec::target("class", ArgKind::Str)],
            optional: vec![ArgSpec::args("min_confidence", ArgKind::Fraction)],
            comparison: ComparisonRule::Forbidden,
            accepts_positional: false,
        },
        Arc::new(eval_detect),
    )?;

    registry.register(
        "attribute",
        PredicateSignature {
            input: InputKind::ImageOrSet,
            output: OutputKind::SameAsInput,
            required: vec![ArgSpec::args("query", ArgKind::Str)],
            optional: vec![ArgSpec::args("threshold", ArgKind::Fraction)],
            comparison: ComparisonRule::Forbidden,
            accepts_positional: false,
        },
        Arc::new(eval_attribute),
    )?;

    registry.register(
        "count",
        PredicateSignature {
            input: InputKind::Set,
            output: OutputKind::Scalar,
            required: vec![],
            optional: vec![],
            comparison: ComparisonRule::Required {
                operators: CompareOp::ALL.to_vec(),
                value: ArgKind::Number,
            },
            accepts_positional: false,
        },
        Arc::new(eval_count),
    )?;

    registry.register(
        "regional",
        PredicateSignature {
            input: InputKind::Set,
            output: OutputKind::Set,
            required: vec![ArgSpec::args("region", choices(&REGION_NAMES))],
            optional: vec![ArgSpec::args("min_overlap", ArgKind::Fraction)],
            comparison: ComparisonRule::Forbidden,
            accepts_positional: false,
        },
        Arc::new(eval_regional),
    )?;

    registry.register(
        "color",
        PredicateSignature {
            input: InputKind::Set,
            output: OutputKind::Set,
            required: vec![ArgSpec::args("color", choices(&COLOR_PALETTE))],
            optional: vec![],
            comparison: ComparisonRule::Forbidden,
            accepts_positional: false,
        },
        Arc::new(eval_color),
    )?;

    registry.register(
        "distance",
        PredicateSignature {
            input: InputKind::Set,
            output: OutputKind::Set,
            required: vec![],
            optional: vec![],
            comparison: ComparisonRule::Required {
                operators: vec![CompareOp::Lt, CompareOp::Gt],
                value: ArgKind::Number,
            },
            accepts_positional: false,
        },
        Arc::new(eval_distance),
    )?;

    registry.register(
        "value_compare",
        PredicateSignature {
            input: InputKind::Scalar,
            output: OutputKind::Scalar,
            required: vec![],
            optional: vec![],
            comparison: ComparisonRule::Required {
                operators: CompareOp::ALL.to_vec(),
                value: ArgKind::Any,
            },
            accepts_positional: false,
        },
        Arc::new(eval_value_compare),
    )?;

    Ok(())
}

// --- argument access helpers -------------------------------------------------

fn str_arg<'a>(pred: &'a PredicateIr, name: &str) -> Result<Option<&'a str>, EvalError> {
    match pred.args.get(name) {
        None => Ok(None),
        Some(serde_json::Value::String(s)) => Ok(Some(s)),
        Some(other) => Err(EvalError::BadArgs(format!(
            "'{name}' must be a string, got {other}"
        ))),
    }
}

fn num_arg(pred: &PredicateIr, name: &str) -> Result<Option<f64>, EvalError> {
    match pred.args.get(name) {
        None => Ok(None),
        Some(v) => match v.as_f64() {
            Some(n) => Ok(Some(n)),
            None => Err(EvalError::BadArgs(format!(
                "'{name}' must be a number, got {v}"
            ))),
        },
    }
}

fn required_str<'a>(pred: &'a PredicateIr, name: &str) -> Result<&'a str, EvalError> {
    str_arg(pred, name)?
        .ok_or_else(|| EvalError::BadArgs(format!("missing required arg '{name}'")))
}

fn comparison_of(pred: &PredicateIr) -> Result<(CompareOp, &Value), EvalError> {
    let cmp = pred
        .comparison
        .as_ref()
        .ok_or_else(|| EvalError::BadArgs("missing comparison".into()))?;
    let op = CompareOp::parse(&cmp.operator).ok_or_else(|| {
        EvalError::BadArgs(format!("illegal comparison operator '{}'", cmp.operator))
    })?;
    Ok((op, &cmp.value))
}

fn require_image<'a>(input: &PredicateInput<'a>) -> Result<&'a str, EvalError> {
    match input {
        PredicateInput::Image(path) => Ok(path),
        other => Err(EvalError::KindMismatch {
            expected: "image",
            got: other.kind_name(),
        }),
    }
}

fn require_set<'a>(input: &PredicateInput<'a>) -> Result<&'a [crate::predicates::Detection], EvalError> {
    match input {
        PredicateInput::Set(set) => Ok(set),
        other => Err(EvalError::KindMismatch {
            expected: "detection-set",
            got: other.kind_name(),
        }),
    }
}

fn require_scalar<'a>(input: &PredicateInput<'a>) -> Result<&'a Value, EvalError> {
    match input {
        PredicateInput::Scalar(v) => Ok(v),
        other => Err(EvalError::KindMismatch {
            expected: "scalar",
            got: other.kind_name(),
        }),
    }
}

// --- implementations ----------------------------------------------------------

/// Detections of `target.class` with confidence ≥ `min_confidence`.
fn eval_detect(req: &EvalRequest<'_>) -> Result<PredicateValue, EvalError> {
    let image = require_image(&req.input)?;
    let class = req
        .pred
        .target
        .as_ref()
        .and_then(|t| t.get("class"))
        .and_then(Value::as_str)
        .ok_or_else(|| EvalError::BadArgs("detect needs target.class".into()))?;
    let min_confidence = num_arg(req.pred, "min_confidence")?.unwrap_or(DEFAULT_THRESHOLD);

    let detections = req.backend.detect_objects(image)?;
    let matching: Vec<_> = detections
        .into_iter()
        .filter(|d| d.class_label == class && d.confidence >= min_confidence)
        .collect();
    Ok(PredicateValue::of_set(matching))
}

/// Text-query scoring: whole image → scalar score vs threshold; detection
/// set → subset whose crop score clears the threshold.
fn eval_attribute(req: &EvalRequest<'_>) -> Result<PredicateValue, EvalError> {
    let query = required_str(req.pred, "query")?;
    let threshold = num_arg(req.pred, "threshold")?.unwrap_or(DEFAULT_THRESHOLD);

    match req.input {
        PredicateInput::Image(image) => {
            let score = req.backend.score_attribute(image, query)?;
            Ok(PredicateValue {
                verdict: score >= threshold,
                payload: Payload::Scalar(Value::Float(score)),
                warnings: Vec::new(),
            })
        }
        PredicateInput::Set(set) => {
            let mut kept = Vec::new();
            for det in set {
                if req.backend.score_detection(det, query)? >= threshold {
                    kept.push(det.clone());
                }
            }
            Ok(PredicateValue::of_set(kept))
        }
        other => Err(EvalError::KindMismatch {
            expected: "image or detection-set",
            got: other.kind_name(),
        }),
    }
}

/// Compares the input set's size.
fn eval_count(req: &EvalRequest<'_>) -> Result<PredicateValue, EvalError> {
    let set = require_set(&req.input)?;
    let (op, value) = comparison_of(req.pred)?;
    let size = Value::Int(set.len() as i64);
    let verdict = compare(&size, op, value)?;
    Ok(PredicateValue::of_comparison(verdict, size))
}

/// Keeps detections whose bbox overlaps the named region by at least
/// `min_overlap` of the bbox's own area. Regions are vertical thirds of the
/// image (full height): left, front (center), right — or the full frame.
fn eval_regional(req: &EvalRequest<'_>) -> Result<PredicateValue, EvalError> {
    let set = require_set(&req.input)?;
    let region = required_str(req.pred, "region")?;
    let min_overlap = num_arg(req.pred, "min_overlap")?.unwrap_or(DEFAULT_THRESHOLD);

    let (x0, x1) = match region {
        "left" => (0.0, 1.0 / 3.0),
        "front" => (1.0 / 3.0, 2.0 / 3.0),
        "right" => (2.0 / 3.0, 1.0),
        "full" => (0.0, 1.0),
        other => {
            return Err(EvalError::BadArgs(format!(
                "unknown region '{other}' (expected {})",
                REGION_NAMES.join(", ")
            )));
        }
    };

    let kept: Vec<_> = set
        .iter()
        .filter(|d| overlap_fraction(d.bbox, x0, x1) >= min_overlap)
        .cloned()
        .collect();
    Ok(PredicateValue::of_set(kept))
}

/// Fraction of the bbox's area that lies inside the region strip
/// `[x0, x1] × [0, 1]`. Degenerate (zero-area) boxes overlap nothing.
fn overlap_fraction(bbox: [f64; 4], x0: f64, x1: f64) -> f64 {
    let [x, y, w, h] = bbox;
    if w <= 0.0 || h <= 0.0 {
        return 0.0;
    }
    let ox = (x + w).min(x1) - x.max(x0);
    let oy = (y + h).min(1.0) - y.max(0.0);
    if ox <= 0.0 || oy <= 0.0 {
        return 0.0;
    }
    (ox * oy) / (w * h)
}

/// Keeps detections whose `color` attribute matches (missing → "other").
fn eval_color(req: &EvalRequest<'_>) -> Result<PredicateValue, EvalError> {
    let set = require_set(&req.input)?;
    let color = required_str(req.pred, "color")?;
    if !COLOR_PALETTE.contains(&color) {
        return Err(EvalError::BadArgs(format!(
            "unknown color '{color}' (palette: {})",
            COLOR_PALETTE.join(", ")
        )));
    }
    let kept: Vec<_> = set.iter().filter(|d| d.color() == color).cloned().collect();
    Ok(PredicateValue::of_set(kept))
}

/// Keeps detections whose `distance_m` satisfies the comparison; detections
/// without the attribute are excluded with a warning.
fn eval_distance(req: &EvalRequest<'_>) -> Result<PredicateValue, EvalError> {
    let set = require_set(&req.input)?;
    let (op, value) = comparison_of(req.pred)?;
    if !matches!(op, CompareOp::Lt | CompareOp::Gt) {
        return Err(EvalError::BadArgs(format!(
            "distance supports only < and >, got '{op}'"
        )));
    }

    let mut kept = Vec::new();
    let mut warnings = Vec::new();
    for det in set {
        match det.distance_m() {
            Some(d) => {
                if compare(&Value::Float(d), op, value)? {
                    kept.push(det.clone());
                }
            }
            None => warnings.push(format!(
                "detection '{}' lacks distance_m and was excluded",
                det.class_label
            )),
        }
    }
    Ok(PredicateValue::of_set(kept).with_warnings(warnings))
}

/// Compares a scalar vehicle-state signal against a threshold.
fn eval_value_compare(req: &EvalRequest<'_>) -> Result<PredicateValue, EvalError> {
    let signal = require_scalar(&req.input)?;
    let (op, value) = comparison_of(req.pred)?;
    let verdict = compare(signal, op, value)?;
    Ok(PredicateValue::of_comparison(verdict, signal.clone()))
}
