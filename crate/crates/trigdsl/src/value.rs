//! Scalar values shared by the DSL, the JSON IR, and the data cache.

use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Absolute tolerance for `=` / `!=` on floating-point operands.
pub const FLOAT_EQ_TOLERANCE: f64 = 1e-9;

/// A literal value: string, number (integer or float), or boolean.
///
/// Integers and floats are distinct variants so that `5` and `5.0` survive
/// round trips through both the pretty-printer and the JSON representation
/// unchanged.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Str(String),
    Int(i64),
    Float(f64),
    Bool(bool),
}

impl Value {
    pub fn str(s: impl Into<String>) -> Self {
        Value::Str(s.into())
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(f) => Some(*f),
            _ => None,
        }
    }

    pub fn is_number(&self) -> bool {
        matches!(self, Value::Int(_) | Value::Float(_))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Str(_) => "string",
            Value::Int(_) => "integer",
            Value::Float(_) => "float",
            Value::Bool(_) => "boolean",
        }
    }

    /// Canonical text used where a string is required but another scalar was
    /// supplied (e.g. `on=5`): the DSL literal without string quotes.
    pub fn canonical_text(&self) -> String {
        match self {
            Value::Str(s) => s.clone(),
            other => other.to_string(),
        }
    }
}

/// Renders the value as a DSL literal. Strings are quoted with `"` and `\`
/// escaped; floats always carry a decimal point so they re-lex as floats.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => {
                let s = format!("{x}");
                if s.contains('.') {
                    f.write_str(&s)
                } else {
                    write!(f, "{s}.0")
                }
            }
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Str(s) => ser.serialize_str(s),
            Value::Int(i) => ser.serialize_i64(*i),
            Value::Float(x) => ser.serialize_f64(*x),
            Value::Bool(b) => ser.serialize_bool(*b),
        }
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let raw = serde_json::Value::deserialize(de)?;
        Value::from_json(&raw).ok_or_else(|| {
            D::Error::custom(format!("expected string, number, or boolean, got {raw}"))
        })
    }
}

impl Value {
    /// Converts a scalar JSON value; `None` for null, arrays, and objects.
    pub fn from_json(raw: &serde_json::Value) -> Option<Value> {
        match raw {
            serde_json::Value::String(s) => Some(Value::Str(s.clone())),
            serde_json::Value::Bool(b) => Some(Value::Bool(*b)),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Some(Value::Int(i))
                } else {
                    n.as_f64().map(Value::Float)
                }
            }
            _ => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("scalar serialization cannot fail")
    }
}

/// Comparison operator of the DSL: exactly `=`, `!=`, `<`, `>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Gt,
}

impl CompareOp {
    pub const ALL: [CompareOp; 4] = [CompareOp::Eq, CompareOp::Ne, CompareOp::Lt, CompareOp::Gt];

    pub fn as_str(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Ne => "!=",
            CompareOp::Lt => "<",
            CompareOp::Gt => ">",
        }
    }

    pub fn parse(s: &str) -> Option<CompareOp> {
        match s {
            "=" => Some(CompareOp::Eq),
            "!=" => Some(CompareOp::Ne),
            "<" => Some(CompareOp::Lt),
            ">" => Some(CompareOp::Gt),
            _ => None,
        }
    }
}

impl fmt::Display for CompareOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompareError {
    #[error("cannot compare {left} with {right} using '{op}'")]
    Incomparable {
        op: CompareOp,
        left: &'static str,
        right: &'static str,
    },
}

/// Compares two scalars. Integers compare exactly; once a float is involved,
/// `=` / `!=` use an absolute tolerance of [`FLOAT_EQ_TOLERANCE`]. Strings and
/// booleans support `=` / `!=` only.
pub fn compare(left: &Value, op: CompareOp, right: &Value) -> Result<bool, CompareError> {
    use CompareOp::*;
    use Value::*;

    let fail = || CompareError::Incomparable {
        op,
        left: left.kind_name(),
        right: right.kind_name(),
    };

    match (left, right) {
        (Int(a), Int(b)) => Ok(match op {
            Eq => a == b,
            Ne => a != b,
            Lt => a < b,
            Gt => a > b,
        }),
        (a, b) if a.is_number() && b.is_number() => {
            let a = a.as_f64().expect("numeric");
            let b = b.as_f64().expect("numeric");
            Ok(match op {
                Eq => (a - b).abs() <= FLOAT_EQ_TOLERANCE,
                Ne => (a - b).abs() > FLOAT_EQ_TOLERANCE,
                Lt => a < b,
                Gt => a > b,
            })
        }
        (Str(a), Str(b)) => match op {
            Eq => Ok(a == b),
            Ne => Ok(a != b),
            _ => Err(fail()),
        },
        (Bool(a), Bool(b)) => match op {
            Eq => Ok(a == b),
            Ne => Ok(a != b),
            _ => Err(fail()),
        },
        _ => Err(fail()),
    }
}
