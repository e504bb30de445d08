//! Core value types shared by predicate implementations.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::predicates::backend::BackendError;
use crate::value::{CompareError, Value};

/// One detected scene element: semantic class plus spatial extent, with
/// optional extra attributes such as `color` or `distance_m`.
///
/// `bbox` is `(x, y, w, h)` in normalized image coordinates, all in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    #[serde(rename = "class")]
    pub class_label: String,
    pub confidence: f64,
    pub bbox: [f64; 4],
    #[serde(flatten, default, skip_serializing_if = "IndexMap::is_empty")]
    pub attributes: IndexMap<String, Value>,
}

impl Detection {
    pub fn new(class_label: impl Into<String>, confidence: f64, bbox: [f64; 4]) -> Self {
        Detection {
            class_label: class_label.into(),
            confidence,
            bbox,
            attributes: IndexMap::new(),
        }
    }

    pub fn with_attribute(mut self, key: impl Into<String>, value: Value) -> Self {
        self.attributes.insert(key.into(), value);
        self
    }

    /// The `color` attribute; detections without one count as "other".
    pub fn color(&self) -> &str {
        self.attributes
            .get("color")
            .and_then(Value::as_str)
            .unwrap_or("other")
    }

    pub fn distance_m(&self) -> Option<f64> {
        self.attributes.get("distance_m").and_then(Value::as_f64)
    }

    /// Numeric attribute looked up by name (used for crop-level attribute
    /// scores in the oracle backend).
    pub fn numeric_attribute(&self, name: &str) -> Option<f64> {
        self.attributes.get(name).and_then(Value::as_f64)
    }
}

/// Result payload of one predicate evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    None,
    Set(Vec<Detection>),
    Scalar(Value),
}

impl Payload {
    pub fn as_set(&self) -> Option<&[Detection]> {
        match self {
            Payload::Set(set) => Some(set),
            _ => None,
        }
    }

    pub fn as_scalar(&self) -> Option<&Value> {
        match self {
            Payload::Scalar(v) => Some(v),
            _ => None,
        }
    }
}

/// Tagged result of one predicate: the Boolean verdict plus the payload a
/// later predicate can consume via `on`. A set-valued predicate's verdict is
/// exactly "payload nonempty"; a comparison predicate's verdict is the
/// comparison outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct PredicateValue {
    pub verdict: bool,
    pub payload: Payload,
    /// Non-fatal notes, e.g. detections skipped for missing attributes.
    pub warnings: Vec<String>,
}

impl PredicateValue {
    /// A set result; the verdict is the set's nonemptiness.
    pub fn of_set(set: Vec<Detection>) -> Self {
        PredicateValue {
            verdict: !set.is_empty(),
            payload: Payload::Set(set),
            warnings: Vec::new(),
        }
    }

    pub fn of_comparison(verdict: bool, scalar: Value) -> Self {
        PredicateValue {
            verdict,
            payload: Payload::Scalar(scalar),
            warnings: Vec::new(),
        }
    }

    pub fn with_warnings(mut self, warnings: Vec<String>) -> Self {
        self.warnings = warnings;
        self
    }
}

/// Input handed to a predicate implementation after `on` resolution.
#[derive(Debug, Clone, Copy)]
pub enum PredicateInput<'a> {
    /// Reference (path or blob id) to an image in the cache.
    Image(&'a str),
    Set(&'a [Detection]),
    Scalar(&'a Value),
}

impl PredicateInput<'_> {
    pub fn kind_name(&self) -> &'static str {
        match self {
            PredicateInput::Image(_) => "image",
            PredicateInput::Set(_) => "detection-set",
            PredicateInput::Scalar(_) => "scalar",
        }
    }
}

/// Failure of one predicate evaluation. The runtime treats any of these as a
/// false verdict (fail-closed) and records the error.
#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("wrong input kind: expected {expected}, got {got}")]
    KindMismatch {
        expected: &'static str,
        got: &'static str,
    },
    #[error("bad arguments: {0}")]
    BadArgs(String),
    #[error(transparent)]
    Compare(#[from] CompareError),
}
