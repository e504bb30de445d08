//! Predicate registry: the "tools" a trigger can invoke, their call
//! signatures (used by IR validation), and their implementations.

pub mod backend;
mod builtins;
mod types;

pub use backend::{
    Annotation, BackendError, Capabilities, ExternalBackend, OracleBackend, PerceptionBackend,
    BACKEND_URL_ENV, DEFAULT_BACKEND_TIMEOUT,
};
pub use builtins::{COLOR_PALETTE, DEFAULT_THRESHOLD, REGION_NAMES};
pub use types::{Detection, EvalError, Payload, PredicateInput, PredicateValue};

use std::sync::Arc;

use indexmap::IndexMap;

use crate::ir::PredicateIr;
use crate::topic::TopicKind;
use crate::value::CompareOp;

/// What a predicate reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    Image,
    Set,
    Scalar,
    ImageOrSet,
    /// Accepts anything; for custom predicates.
    Any,
}

impl InputKind {
    pub fn accepts_topic(self, kind: TopicKind) -> bool {
        match self {
            InputKind::Image => kind == TopicKind::Image,
            InputKind::Set => kind == TopicKind::DetectionSet,
            InputKind::Scalar => kind == TopicKind::Scalar,
            InputKind::ImageOrSet => {
                matches!(kind, TopicKind::Image | TopicKind::DetectionSet)
            }
            InputKind::Any => true,
        }
    }

    pub fn accepts_payload(self, kind: PayloadKind) -> bool {
        match self {
            InputKind::Image => false,
            InputKind::Set | InputKind::ImageOrSet => kind == PayloadKind::Set,
            InputKind::Scalar => kind == PayloadKind::Scalar,
            InputKind::Any => true,
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            InputKind::Image => "an image",
            InputKind::Set => "a detection-set",
            InputKind::Scalar => "a scalar",
            InputKind::ImageOrSet => "an image or detection-set",
            InputKind::Any => "any input",
        }
    }
}

/// What a predicate's payload binds to when stored via `AS`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayloadKind {
    Set,
    Scalar,
}

/// Output kind of a predicate, possibly depending on its input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputKind {
    Set,
    Scalar,
    /// Set input yields a filtered set; image input yields a scalar score.
    SameAsInput,
}

impl OutputKind {
    /// Resolves against the predicate's (possibly unknown) input kind.
    pub fn resolve(self, input: Option<PayloadOrImage>) -> Option<PayloadKind> {
        match self {
            OutputKind::Set => Some(PayloadKind::Set),
            OutputKind::Scalar => Some(PayloadKind::Scalar),
            OutputKind::SameAsInput => match input? {
                PayloadOrImage::Image => Some(PayloadKind::Scalar),
                PayloadOrImage::Payload(PayloadKind::Set) => Some(PayloadKind::Set),
                PayloadOrImage::Payload(PayloadKind::Scalar) => Some(PayloadKind::Scalar),
            },
        }
    }
}

/// Resolved source kind of a predicate input: a payload kind or an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayloadOrImage {
    Image,
    Payload(PayloadKind),
}

/// Where a declared argument lives in the IR.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgLocation {
    Args,
    Target,
}

/// Value constraint of a declared argument.
#[derive(Debug, Clone, PartialEq)]
pub enum ArgKind {
    Str,
    Number,
    /// A number in `[0, 1]`.
    Fraction,
    /// One of a fixed set of strings.
    Choice(Vec<String>),
    Any,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArgSpec {
    pub name: String,
    pub kind: ArgKind,
    pub location: ArgLocation,
}

impl ArgSpec {
    pub fn args(name: &str, kind: ArgKind) -> Self {
        ArgSpec {
            name: name.to_string(),
            kind,
            location: ArgLocation::Args,
        }
    }

    pub fn target(name: &str, kind: ArgKind) -> Self {
        ArgSpec {
            name: name.to_string(),
            kind,
            location: ArgLocation::Target,
        }
    }
}

/// Whether and how a predicate uses its `comparison` clause.
#[derive(Debug, Clone, PartialEq)]
pub enum ComparisonRule {
    Forbidden,
    Required {
        operators: Vec<CompareOp>,
        value: ArgKind,
    },
}

/// Call signature of one predicate type; drives IR validation.
#[derive(Debug, Clone, PartialEq)]
pub struct PredicateSignature {
    pub input: InputKind,
    pub output: OutputKind,
    pub required: Vec<ArgSpec>,
    pub optional: Vec<ArgSpec>,
    pub comparison: ComparisonRule,
    pub accepts_positional: bool,
}

/// Implementation of one predicate type.
pub type EvalFn =
    Arc<dyn Fn(&EvalRequest<'_>) -> Result<PredicateValue, EvalError> + Send + Sync>;

/// Everything an implementation gets to see for one evaluation.
pub struct EvalRequest<'a> {
    pub pred: &'a PredicateIr,
    pub input: PredicateInput<'a>,
    pub backend: &'a dyn PerceptionBackend,
}

pub struct PredicateEntry {
    pub signature: PredicateSignature,
    pub eval: EvalFn,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("predicate '{0}' is already registered")]
    Duplicate(String),
}

/// Immutable-after-startup map of predicate type name → implementation.
pub struct PredicateRegistry {
    entries: IndexMap<String, PredicateEntry>,
}

impl PredicateRegistry {
    /// An empty registry; most callers want [`PredicateRegistry::with_builtins`].
    pub fn new() -> Self {
        PredicateRegistry {
            entries: IndexMap::new(),
        }
    }

    /// Registry holding the built-in predicates: detect, attribute, count,
    /// regional, color, distance, value_compare.
    pub fn with_builtins() -> Self {
        let mut registry = PredicateRegistry::new();
        builtins::register_all(&mut registry).expect("builtins register once");
        registry
    }

    pub fn register(
        &mut self,
        name: impl Into<String>,
        signature: PredicateSignature,
        eval: EvalFn,
    ) -> Result<(), RegistryError> {
        let name = name.into();
        if self.entries.contains_key(&name) {
            return Err(RegistryError::Duplicate(name));
        }
        self.entries.insert(name, PredicateEntry { signature, eval });
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&PredicateEntry> {
        self.entries.get(name)
    }

    pub fn signature(&self, name: &str) -> Option<&PredicateSignature> {
        self.entries.get(name).map(|e| &e.signature)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Human-readable signature lines, one per predicate (used in the LLM
    /// system context).
    pub fn describe(&self) -> String {
        let mut out = String::new();
        for (name, entry) in &self.entries {
            let sig = &entry.signature;
            out.push_str(name);
            out.push_str("(input: ");
            out.push_str(sig.input.describe());
            for arg in &sig.required {
                out.push_str(&format!(", {}: {}", arg.name, describe_arg_kind(&arg.kind)));
            }
            for arg in &sig.optional {
                out.push_str(&format!(
                    ", [{}: {}]",
                    arg.name,
                    describe_arg_kind(&arg.kind)
                ));
            }
            if let ComparisonRule::Required { operators, .. } = &sig.comparison {
                let ops: Vec<&str> = operators.iter().map(|op| op.as_str()).collect();
                out.push_str(&format!(", comparison: {}", ops.join(" ")));
            }
            out.push_str(")\n");
        }
        out
    }
}

impl Default for PredicateRegistry {
    fn default() -> Self {
        PredicateRegistry::with_builtins()
    }
}

fn describe_arg_kind(kind: &ArgKind) -> String {
    match kind {
        ArgKind::Str => "string".to_string(),
        ArgKind::Number => "number".to_string(),
        ArgKind::Fraction => "fraction 0..1".to_string(),
        ArgKind::Choice(options) => options.join("|"),
        ArgKind::Any => "any".to_string(),
    }
}
