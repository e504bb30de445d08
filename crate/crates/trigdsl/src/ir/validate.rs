//! Semantic validation of trigger IR against a predicate registry and,
//! optionally, a set of declared data topics.
//!
//! Two strictness levels exist because validation happens both inside the
//! generation repair loop (where the topic configuration may be unknown) and
//! before deployment (where it is known):
//!
//! * [`validate`] checks everything that can be checked from the IR and the
//!   registry alone. Input references that could be topics are not resolved.
//! * [`validate_with_topics`] additionally resolves every input reference to
//!   a declared topic or an earlier alias, and checks input kinds end to end.

use indexmap::IndexMap;

use crate::dsl::is_identifier;
use crate::ir::{Comparison, IrCode, IrDiagnostic, PredicateIr, TriggerIr};
use crate::predicates::{
    ArgKind, ArgLocation, ComparisonRule, PayloadKind, PayloadOrImage, PredicateRegistry,
    PredicateSignature,
};
use crate::topic::{TopicKind, TopicSet};
use crate::value::{CompareOp, Value};

/// Validates a trigger against the registry alone. Input references are
/// treated leniently: any name that is not a forward alias reference is
/// assumed to be a topic of a suitable kind.
pub fn validate(ir: &TriggerIr, registry: &PredicateRegistry) -> Vec<IrDiagnostic> {
    Validator {
        registry,
        topics: None,
        default_input: None,
    }
    .run(ir)
}

/// Validates a trigger against the registry and a declared topic set.
/// `default_input` is the topic a predicate reads when it has no `on` field
/// and the trigger's own spec does not name an `input`.
pub fn validate_with_topics(
    ir: &TriggerIr,
    registry: &PredicateRegistry,
    topics: &TopicSet,
    default_input: Option<&str>,
) -> Vec<IrDiagnostic> {
    Validator {
        registry,
        topics: Some(topics),
        default_input,
    }
    .run(ir)
}

struct Validator<'a> {
    registry: &'a PredicateRegistry,
    topics: Option<&'a TopicSet>,
    default_input: Option<&'a str>,
}

/// What a predicate's input reference resolved to.
#[derive(Clone, Copy)]
enum Source<'a> {
    /// An earlier predicate's alias, with its payload kind when known.
    Alias(&'a str, Option<PayloadKind>),
    Topic(&'a str, TopicKind),
    /// Unresolvable in lenient mode; no kind checks apply.
    Unknown,
}

impl<'a> Validator<'a> {
    fn run(&self, ir: &TriggerIr) -> Vec<IrDiagnostic> {
        let mut diags = Vec::new();

        for key in ir.extras.keys() {
            diags.push(IrDiagnostic::error(
                IrCode::UnmappedField,
                format!("/{key}"),
                format!("unknown trigger field '{key}' has no DSL equivalent"),
            ));
        }
        if !is_identifier(&ir.name) {
            diags.push(IrDiagnostic::error(
                IrCode::InvalidIdentifier,
                "/name",
                format!("'{}' is not a valid identifier", ir.name),
            ));
        }
        self.check_spec(ir, &mut diags);

        if ir.predicates.is_empty() {
            diags.push(IrDiagnostic::error(
                IrCode::EmptyPredicates,
                "/predicates",
                "a trigger needs at least one predicate",
            ));
            return diags;
        }

        // First definition index of every alias, for forward-reference checks.
        let mut first_def: IndexMap<&str, usize> = IndexMap::new();
        for (index, pred) in ir.predicates.iter().enumerate() {
            if let Some(alias) = pred.store_as.as_deref() {
                first_def.entry(alias).or_insert(index);
            }
        }

        let default_input = ir
            .spec
            .get("input")
            .and_then(Value::as_str)
            .or(self.default_input);

        // Aliases defined so far, with payload kinds when resolvable.
        let mut aliases: IndexMap<&str, Option<PayloadKind>> = IndexMap::new();

        for (index, pred) in ir.predicates.iter().enumerate() {
            let at = |suffix: &str| format!("/predicates/{index}{suffix}");
            let signature = self.check_head(pred, &at, &mut diags);
            let source =
                self.resolve_source(pred, index, default_input, &first_def, &aliases, &mut diags);

            if let Some(sig) = signature {
                self.check_input_kind(pred, sig, source, &at, &mut diags);
                self.check_args(pred, sig, &at, &mut diags);
                self.check_comparison(pred, sig, &at, &mut diags);
            }

            if let Some(alias) = pred.store_as.as_deref() {
                if !is_identifier(alias) {
                    diags.push(IrDiagnostic::error(
                        IrCode::InvalidIdentifier,
                        at("/store_as"),
                        format!("'{alias}' is not a valid identifier"),
                    ));
                }
                if first_def.get(alias) != Some(&index) {
                    diags.push(IrDiagnostic::error(
                        IrCode::DuplicateStoreAs,
                        at("/store_as"),
                        format!("alias '{alias}' is already stored by an earlier predicate"),
                    ));
                }
                if self.topics.is_some_and(|t| t.contains(alias)) {
                    diags.push(IrDiagnostic::warning(
                        IrCode::AliasShadowsTopic,
                        at("/store_as"),
                        format!("alias '{alias}' shadows the topic of the same name; later predicates read the alias"),
                    ));
                }
                let input = source_payload(source);
                let output = signature.and_then(|sig| sig.output.resolve(input));
                aliases.insert(alias, output);
            }
        }

        diags
    }

    /// Checks the header spec map: key validity, frequency, input.
    fn check_spec(&self, ir: &TriggerIr, diags: &mut Vec<IrDiagnostic>) {
        for (key, value) in &ir.spec {
            if !is_identifier(key) {
                diags.push(IrDiagnostic::error(
                    IrCode::InvalidIdentifier,
                    format!("/spec/{key}"),
                    format!("'{key}' is not a valid identifier"),
                ));
                continue;
            }
            match key.as_str() {
                "frequency" => {
                    let ok = match value {
                        Value::Int(n) => *n > 0,
                        Value::Float(f) => f.is_finite() && *f > 0.0,
                        _ => false,
                    };
                    if !ok {
                        diags.push(IrDiagnostic::error(
                            IrCode::BadFrequency,
                            "/spec/frequency",
                            format!("frequency must be a positive number, got {value}"),
                        ));
                    }
                }
                "input" => match value {
                    Value::Str(name) => {
                        if let Some(topics) = self.topics {
                            if !topics.contains(name) {
                                diags.push(IrDiagnostic::error(
                                    IrCode::UndeclaredTopic,
                                    "/spec/input",
                                    format!("input topic '{name}' is not declared"),
                                ));
                            }
                        }
                    }
                    other => diags.push(IrDiagnostic::error(
                        IrCode::WrongType,
                        "/spec/input",
                        format!("input must be a topic name string, got {other}"),
                    )),
                },
                _ => {}
            }
        }
    }

    /// Identifier and registry checks for one predicate; returns its
    /// signature when the predicate type is known.
    fn check_head(
        &self,
        pred: &PredicateIr,
        at: &dyn Fn(&str) -> String,
        diags: &mut Vec<IrDiagnostic>,
    ) -> Option<&'a PredicateSignature> {
        for key in pred.extras.keys() {
            diags.push(IrDiagnostic::error(
                IrCode::UnmappedField,
                at(&format!("/{key}")),
                format!("unknown predicate field '{key}' has no DSL equivalent"),
            ));
        }
        if pred.args.contains_key("on") {
            diags.push(IrDiagnostic::error(
                IrCode::ReservedArgName,
                at("/args/on"),
                "'on' is the input reference and must be a predicate field, not an arg",
            ));
        }
        if !is_identifier(&pred.ptype) {
            diags.push(IrDiagnostic::error(
                IrCode::InvalidIdentifier,
                at("/type"),
                format!("'{}' is not a valid identifier", pred.ptype),
            ));
            return None;
        }
        let signature = self.registry.signature(&pred.ptype);
        if signature.is_none() {
            let known: Vec<&str> = self.registry.names().collect();
            diags.push(IrDiagnostic::error(
                IrCode::UnknownPredicate,
                at("/type"),
                format!(
                    "unknown predicate '{}' (known: {})",
                    pred.ptype,
                    known.join(", ")
                ),
            ));
        }
        signature
    }

    /// Resolves the predicate's input reference and reports reference-level
    /// problems (forward references, undeclared topics, bad names).
    fn resolve_source<'s>(
        &self,
        pred: &'s PredicateIr,
        index: usize,
        default_input: Option<&'s str>,
        first_def: &IndexMap<&str, usize>,
        aliases: &IndexMap<&'s str, Option<PayloadKind>>,
        diags: &mut Vec<IrDiagnostic>,
    ) -> Source<'s> {
        let at = |suffix: &str| format!("/predicates/{index}{suffix}");
        if let Some(name) = pred.on.as_deref() {
            if !is_identifier(name) {
                diags.push(IrDiagnostic::error(
                    IrCode::InvalidIdentifier,
                    at("/on"),
                    format!("'{name}' is not a valid identifier"),
                ));
                return Source::Unknown;
            }
            if let Some(kind) = aliases.get(name) {
                return Source::Alias(name, *kind);
            }
            if let Some(def_index) = first_def.get(name) {
                // Not yet in `aliases`, so it is defined here or later.
                let message = if *def_index == index {
                    format!("'{name}' is this predicate's own alias; a predicate cannot read its own output")
                } else {
                    format!(
                        "'{name}' is stored by a later predicate (#{def_index}); reorder so the producer comes first"
                    )
                };
                diags.push(IrDiagnostic::error(IrCode::ForwardReference, at("/on"), message));
                return Source::Unknown;
            }
            return self.resolve_topic(name, &at("/on"), diags);
        }

        // Implicit input: the trigger-level input topic. Aliases never apply;
        // the runtime reads the topic directly.
        match default_input {
            Some(name) => self.resolve_topic(name, &at("/on"), diags),
            None => Source::Unknown,
        }
    }

    fn resolve_topic<'s>(
        &self,
        name: &'s str,
        path: &str,
        diags: &mut Vec<IrDiagnostic>,
    ) -> Source<'s> {
        let Some(topics) = self.topics else {
            return Source::Unknown;
        };
        match topics.get(name) {
            Some(topic) => Source::Topic(name, topic.kind),
            None => {
                diags.push(IrDiagnostic::error(
                    IrCode::UndeclaredTopic,
                    path,
                    format!("topic '{name}' is not declared"),
                ));
                Source::Unknown
            }
        }
    }

    fn check_input_kind(
        &self,
        pred: &PredicateIr,
        sig: &PredicateSignature,
        source: Source<'_>,
        at: &dyn Fn(&str) -> String,
        diags: &mut Vec<IrDiagnostic>,
    ) {
        let mismatch = match source {
            Source::Alias(name, Some(kind)) if !sig.input.accepts_payload(kind) => Some(format!(
                "'{}' reads {}, but alias '{name}' holds {}",
                pred.ptype,
                sig.input.describe(),
                payload_name(kind),
            )),
            Source::Topic(name, kind) if !sig.input.accepts_topic(kind) => Some(format!(
                "'{}' reads {}, but topic '{name}' carries {}",
                pred.ptype,
                sig.input.describe(),
                kind,
            )),
            _ => None,
        };
        if let Some(message) = mismatch {
            diags.push(IrDiagnostic::error(IrCode::KindMismatch, at("/on"), message));
        }
    }

    /// Declared-argument checks for both locations (`args` and `target`).
    fn check_args(
        &self,
        pred: &PredicateIr,
        sig: &PredicateSignature,
        at: &dyn Fn(&str) -> String,
        diags: &mut Vec<IrDiagnostic>,
    ) {
        let declared = |location: ArgLocation| {
            sig.required
                .iter()
                .chain(&sig.optional)
                .filter(move |spec| spec.location == location)
        };

        // Required arguments must be present in their location.
        for spec in &sig.required {
            let (present, path) = match spec.location {
                ArgLocation::Args => (pred.args.contains_key(&spec.name), at(&format!("/args/{}", spec.name))),
                ArgLocation::Target => (
                    pred.target.as_ref().is_some_and(|t| t.contains_key(&spec.name)),
                    at(&format!("/target/{}", spec.name)),
                ),
            };
            if !present {
                diags.push(IrDiagnostic::error(
                    IrCode::MissingRequiredArg,
                    path,
                    format!("'{}' requires arg '{}'", pred.ptype, spec.name),
                ));
            }
        }

        // Every present target entry must be declared and well-kinded.
        for (key, value) in pred.target.iter().flatten() {
            match declared(ArgLocation::Target).find(|spec| spec.name == *key) {
                Some(spec) => {
                    if let Err(why) = check_value_kind(&spec.kind, value) {
                        diags.push(IrDiagnostic::error(
                            IrCode::BadArgValue,
                            at(&format!("/target/{key}")),
                            format!("target '{key}' {why}, got {value}"),
                        ));
                    }
                }
                None => diags.push(IrDiagnostic::error(
                    IrCode::UnknownArg,
                    at(&format!("/target/{key}")),
                    format!("'{}' takes no target entry '{key}'", pred.ptype),
                )),
            }
        }

        // Every present arg must be declared (or be a permitted positional
        // array) and well-kinded.
        for (key, value) in &pred.args {
            if key == "on" {
                continue; // reported as RESERVED_ARG_NAME already
            }
            if key == "positional" {
                if !sig.accepts_positional {
                    diags.push(IrDiagnostic::error(
                        IrCode::UnknownArg,
                        at("/args/positional"),
                        format!("'{}' takes no positional arguments", pred.ptype),
                    ));
                }
                continue;
            }
            if !is_identifier(key) {
                diags.push(IrDiagnostic::error(
                    IrCode::InvalidIdentifier,
                    at(&format!("/args/{key}")),
                    format!("'{key}' is not a valid identifier"),
                ));
                continue;
            }
            if declared(ArgLocation::Target).any(|spec| spec.name == *key) {
                diags.push(IrDiagnostic::error(
                    IrCode::ReservedArgName,
                    at(&format!("/args/{key}")),
                    format!("'{key}' belongs in this predicate's target, not its args"),
                ));
                continue;
            }
            match declared(ArgLocation::Args).find(|spec| spec.name == *key) {
                Some(spec) => {
                    if let Err(why) = check_json_kind(&spec.kind, value) {
                        diags.push(IrDiagnostic::error(
                            IrCode::BadArgValue,
                            at(&format!("/args/{key}")),
                            format!("arg '{key}' {why}, got {value}"),
                        ));
                    }
                }
                None => {
                    let known: Vec<&str> = declared(ArgLocation::Args)
                        .map(|spec| spec.name.as_str())
                        .collect();
                    let hint = if known.is_empty() {
                        String::from("takes no named args")
                    } else {
                        format!("takes: {}", known.join(", "))
                    };
                    diags.push(IrDiagnostic::error(
                        IrCode::UnknownArg,
                        at(&format!("/args/{key}")),
                        format!("'{}' has no arg '{key}' ({hint})", pred.ptype),
                    ));
                }
            }
        }
    }

    fn check_comparison(
        &self,
        pred: &PredicateIr,
        sig: &PredicateSignature,
        at: &dyn Fn(&str) -> String,
        diags: &mut Vec<IrDiagnostic>,
    ) {
        match (&pred.comparison, &sig.comparison) {
            (None, ComparisonRule::Forbidden) => {}
            (None, ComparisonRule::Required { operators, .. }) => {
                let ops: Vec<&str> = operators.iter().map(|op| op.as_str()).collect();
                diags.push(IrDiagnostic::error(
                    IrCode::MissingComparison,
                    at("/comparison"),
                    format!(
                        "'{}' requires a comparison (operators: {})",
                        pred.ptype,
                        ops.join(", ")
                    ),
                ));
            }
            (Some(Comparison { operator, .. }), ComparisonRule::Forbidden) => {
                diags.push(IrDiagnostic::error(
                    IrCode::UnexpectedComparison,
                    at("/comparison"),
                    format!("'{}' does not take a comparison ('{operator} …')", pred.ptype),
                ));
            }
            (Some(cmp), ComparisonRule::Required { operators, value }) => {
                match CompareOp::parse(&cmp.operator) {
                    None => diags.push(IrDiagnostic::error(
                        IrCode::IllegalOperator,
                        at("/comparison/operator"),
                        format!(
                            "unknown comparison operator '{}' (grammar allows =, !=, <, >)",
                            cmp.operator
                        ),
                    )),
                    Some(op) if !operators.contains(&op) => {
                        let ops: Vec<&str> = operators.iter().map(|o| o.as_str()).collect();
                        diags.push(IrDiagnostic::error(
                            IrCode::IllegalOperator,
                            at("/comparison/operator"),
                            format!(
                                "'{}' does not support '{op}' (allowed: {})",
                                pred.ptype,
                                ops.join(", ")
                            ),
                        ));
                    }
                    Some(_) => {}
                }
                if let Err(why) = check_value_kind(value, &cmp.value) {
                    diags.push(IrDiagnostic::error(
                        IrCode::BadArgValue,
                        at("/comparison/value"),
                        format!("comparison value {why}, got {}", cmp.value),
                    ));
                }
            }
        }
    }
}

fn source_payload(source: Source<'_>) -> Option<PayloadOrImage> {
    match source {
        Source::Alias(_, kind) => kind.map(PayloadOrImage::Payload),
        Source::Topic(_, TopicKind::Image) => Some(PayloadOrImage::Image),
        Source::Topic(_, TopicKind::DetectionSet) => Some(PayloadOrImage::Payload(PayloadKind::Set)),
        Source::Topic(_, TopicKind::Scalar) => Some(PayloadOrImage::Payload(PayloadKind::Scalar)),
        Source::Topic(_, TopicKind::Pointcloud) => None,
        Source::Unknown => None,
    }
}

fn payload_name(kind: PayloadKind) -> &'static str {
    match kind {
        PayloadKind::Set => "a detection-set",
        PayloadKind::Scalar => "a scalar",
    }
}

/// Kind check for a DSL scalar ([`Value`]).
fn check_value_kind(kind: &ArgKind, value: &Value) -> Result<(), String> {
    match kind {
        ArgKind::Any => Ok(()),
        ArgKind::Str => match value {
            Value::Str(_) => Ok(()),
            _ => Err("must be a string".into()),
        },
        ArgKind::Number => match value {
            Value::Int(_) | Value::Float(_) => Ok(()),
            _ => Err("must be a number".into()),
        },
        ArgKind::Fraction => match value {
            Value::Int(n) if (0..=1i64).contains(n) => Ok(()),
            Value::Float(f) if (0.0..=1.0).contains(f) => Ok(()),
            Value::Int(_) | Value::Float(_) => Err("must be within [0, 1]".into()),
            _ => Err("must be a number within [0, 1]".into()),
        },
        ArgKind::Choice(options) => match value {
            Value::Str(s) if options.iter().any(|o| o == s) => Ok(()),
            _ => Err(format!("must be one of: {}", options.join(", "))),
        },
    }
}

/// Kind check for a JSON scalar as stored in `PredicateIr::args`.
fn check_json_kind(kind: &ArgKind, value: &serde_json::Value) -> Result<(), String> {
    match Value::from_json(value) {
        Some(scalar) => check_value_kind(kind, &scalar),
        None => Err("must be a scalar".into()),
    }
}
