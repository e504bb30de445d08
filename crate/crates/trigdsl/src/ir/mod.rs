//! JSON intermediate representation of triggers: the interchange format
//! between the compiler, the LLM bridge, and the runtime.
//!
//! A trigger document looks like
//!
//! ```json
//! {
//!   "type": "trigger",
//!   "name": "busy_street",
//!   "spec": {"frequency": 2},
//!   "predicates": [
//!     {"type": "detect", "target": {"class": "person"}, "store_as": "p"},
//!     {"type": "count", "on": "p", "comparison": {"operator": ">", "value": 5}}
//!   ]
//! }
//! ```

mod compile;
mod decompile;
mod json;
mod validate;

pub use compile::compile;
pub use decompile::decompile;
pub use json::{from_json, from_json_value, to_json, to_json_value};
pub use validate::{validate, validate_with_topics};

use indexmap::IndexMap;

use crate::value::Value;

/// Compiled form of one trigger. The JSON `type` field is the constant
/// `"trigger"` and is not stored. Unknown JSON fields are preserved in
/// `extras` so the validator and decompiler can report them precisely.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriggerIr {
    pub name: String,
    /// Header spec entries (e.g. `frequency`, `input`), in order.
    pub spec: IndexMap<String, Value>,
    pub predicates: Vec<PredicateIr>,
    /// Unrecognized top-level fields, kept verbatim.
    pub extras: IndexMap<String, serde_json::Value>,
}

/// One predicate of a trigger.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PredicateIr {
    /// Predicate type identifier (the JSON `type` field).
    pub ptype: String,
    /// Input reference: a topic name or an earlier `store_as` alias.
    pub on: Option<String>,
    /// Detection target, e.g. `{"class": "person"}`.
    pub target: Option<IndexMap<String, Value>>,
    pub comparison: Option<Comparison>,
    /// Remaining named arguments. Bare positional arguments are collected
    /// under the key `positional` as an array of scalars.
    pub args: IndexMap<String, serde_json::Value>,
    pub store_as: Option<String>,
    /// Logical negation; serialized only when true.
    pub not: bool,
    /// Unrecognized fields, kept verbatim.
    pub extras: IndexMap<String, serde_json::Value>,
}

/// A comparison clause. The operator is kept as raw text so that the
/// validator can diagnose illegal operators in machine-generated IR.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub operator: String,
    pub value: Value,
}

impl PredicateIr {
    pub fn new(ptype: impl Into<String>) -> Self {
        PredicateIr {
            ptype: ptype.into(),
            ..Default::default()
        }
    }
}

/// Machine-readable diagnostic codes for IR validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrCode {
    MalformedJson,
    RootNotObject,
    MissingField,
    WrongType,
    UnmappedField,
    EmptyPredicates,
    InvalidIdentifier,
    UnknownPredicate,
    MissingRequiredArg,
    UnknownArg,
    BadArgValue,
    ReservedArgName,
    MissingComparison,
    UnexpectedComparison,
    IllegalOperator,
    BadFrequency,
    DuplicateStoreAs,
    ForwardReference,
    UndeclaredTopic,
    KindMismatch,
    AliasShadowsTopic,
}

impl IrCode {
    pub fn as_str(self) -> &'static str {
        match self {
            IrCode::MalformedJson => "MALFORMED_JSON",
            IrCode::RootNotObject => "ROOT_NOT_OBJECT",
            IrCode::MissingField => "MISSING_FIELD",
            IrCode::WrongType => "WRONG_TYPE",
            IrCode::UnmappedField => "UNMAPPED_FIELD",
            IrCode::EmptyPredicates => "EMPTY_PREDICATES",
            IrCode::InvalidIdentifier => "INVALID_IDENTIFIER",
            IrCode::UnknownPredicate => "UNKNOWN_PREDICATE",
            IrCode::MissingRequiredArg => "MISSING_REQUIRED_ARG",
            IrCode::UnknownArg => "UNKNOWN_ARG",
            IrCode::BadArgValue => "BAD_ARG_VALUE",
            IrCode::ReservedArgName => "RESERVED_ARG_NAME",
            IrCode::MissingComparison => "MISSING_COMPARISON",
            IrCode::UnexpectedComparison => "UNEXPECTED_COMPARISON",
            IrCode::IllegalOperator => "ILLEGAL_OPERATOR",
            IrCode::BadFrequency => "BAD_FREQUENCY",
            IrCode::DuplicateStoreAs => "DUPLICATE_STORE_AS",
            IrCode::ForwardReference => "FORWARD_REFERENCE",
            IrCode::UndeclaredTopic => "UNDECLARED_TOPIC",
            IrCode::KindMismatch => "KIND_MISMATCH",
            IrCode::AliasShadowsTopic => "ALIAS_SHADOWS_TOPIC",
        }
    }
}

impl std::fmt::Display for IrCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub use crate::dsl::Severity;

/// One finding about an IR document. `path` is a JSON-pointer-style location
/// such as `/predicates/3/comparison`.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{severity}[{code}] at {path}: {message}")]
pub struct IrDiagnostic {
    pub severity: Severity,
    pub code: IrCode,
    pub message: String,
    pub path: String,
}

impl IrDiagnostic {
    pub fn error(code: IrCode, path: impl Into<String>, message: impl Into<String>) -> Self {
        IrDiagnostic {
            severity: Severity::Error,
            code,
            message: message.into(),
            path: path.into(),
        }
    }

    pub fn warning(code: IrCode, path: impl Into<String>, message: impl Into<String>) -> Self {
        IrDiagnostic {
            severity: Severity::Warning,
            code,
            message: message.into(),
            path: path.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

/// True when `diagnostics` contains no errors (warnings are allowed).
pub fn is_clean(diagnostics: &[IrDiagnostic]) -> bool {
    !diagnostics.iter().any(IrDiagnostic::is_error)
}
