//! Trigger execution: one engine per compiled trigger, scheduled by a
//! polling manager.
//!
//! An engine evaluates only when both gates are open: some subscribed topic
//! has a sample it has not seen (freshness), and at least `1/frequency`
//! seconds have passed since its last evaluation. Evaluation runs the
//! predicates in order over an atomic situation snapshot, threading
//! `store_as` results through per-cycle [`Bindings`], and short-circuits the
//! conjunction on the first false conjunct. Any predicate error fails the
//! trigger closed: the verdict is false, never true.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::cache::{DataCache, Sample, SampleValue, SituationView};
use crate::clock::{secs_to_nanos, Clock, Nanos};
use crate::ir::{validate_with_topics, IrCode, IrDiagnostic, PredicateIr, TriggerIr};
use crate::predicates::{
    EvalError, EvalRequest, PerceptionBackend, PredicateInput, PredicateRegistry, PredicateValue,
};
use crate::topic::TopicSet;
use crate::value::Value;

/// `store_as` results of the current evaluation cycle. Cleared between
/// cycles: situations are instantaneous, so aliases never persist.
#[derive(Debug, Default)]
pub struct Bindings {
    values: IndexMap<String, PredicateValue>,
}

impl Bindings {
    pub fn bind(&mut self, alias: &str, value: PredicateValue) {
        self.values.insert(alias.to_string(), value);
    }

    pub fn get(&self, alias: &str) -> Option<&PredicateValue> {
        self.values.get(alias)
    }
}

/// How one predicate fared within an evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PredicateStatus {
    /// Ran to completion; `verdict` is the predicate's own truth value,
    /// before any `NOT` is applied.
    Evaluated { verdict: bool },
    /// Not run because an earlier conjunct already decided the trigger.
    Skipped,
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredicateOutcome {
    #[serde(rename = "type")]
    pub ptype: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alias: Option<String>,
    #[serde(flatten)]
    pub status: PredicateStatus,
}

/// Result of one trigger evaluation. When `error` is absent, `verdict` is
/// the conjunction of all predicate verdicts with their `not` flags applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutcome {
    pub trigger_name: String,
    pub verdict: bool,
    pub predicates: Vec<PredicateOutcome>,
    pub eval_timestamp: Nanos,
    pub duration_ns: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum RuntimeError {
    #[error("unknown predicate '{0}'")]
    UnknownPredicate(String),
    #[error("no data for input '{0}'")]
    MissingInput(String),
    #[error("predicate has no 'on' and no default input topic is configured")]
    NoDefaultInput,
    #[error("alias '{0}' holds no payload")]
    EmptyBinding(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// One trigger's execution state.
#[derive(Debug)]
pub struct TriggerEngine {
    ir: TriggerIr,
    /// Topics this trigger reads (on-references that are not aliases, plus
    /// the default input topic when some predicate reads it implicitly).
    subscriptions: Vec<String>,
    /// Resolved implicit-input topic: the trigger's `input` spec entry,
    /// falling back to the system default.
    default_input: Option<String>,
    min_period: Nanos,
    last_eval: Option<Nanos>,
    last_seen: IndexMap<String, u64>,
}

impl TriggerEngine {
    /// Validates `ir` against the registry and topics and computes the
    /// engine's subscriptions. Any validation error aborts instantiation.
    pub fn new(
        ir: TriggerIr,
        registry: &PredicateRegistry,
        topics: &TopicSet,
        default_input: Option<&str>,
    ) -> Result<Self, Vec<IrDiagnostic>> {
        let mut errors: Vec<IrDiagnostic> =
            validate_with_topics(&ir, registry, topics, default_input)
                .into_iter()
                .filter(IrDiagnostic::is_error)
                .collect();

        let default_input = ir
            .spec
            .get("input")
            .and_then(Value::as_str)
            .or(default_input)
            .map(str::to_string);

        let mut subscriptions: Vec<String> = Vec::new();
        let mut subscribe = |name: &str| {
            if !subscriptions.iter().any(|s| s == name) {
                subscriptions.push(name.to_string());
            }
        };
        let mut aliases: Vec<&str> = Vec::new();
        for (index, pred) in ir.predicates.iter().enumerate() {
            match pred.on.as_deref() {
                Some(name) => {
                    if !aliases.contains(&name) {
                        subscribe(name);
                    }
                }
                None => match &default_input {
                    Some(topic) => subscribe(topic),
                    None => errors.push(IrDiagnostic::error(
                        IrCode::UndeclaredTopic,
                        format!("/predicates/{index}/on"),
                        RuntimeError::NoDefaultInput.to_string(),
                    )),
                },
            }
            if let Some(alias) = pred.store_as.as_deref() {
                aliases.push(alias);
            }
        }
        if !errors.is_empty() {
            return Err(errors);
        }

        let min_period = match ir.spec.get("frequency") {
            Some(Value::Int(n)) => secs_to_nanos(1.0 / *n as f64),
            Some(Value::Float(f)) => secs_to_nanos(1.0 / *f),
            _ => 0, // ungated by time: freshness-only
        };

        Ok(TriggerEngine {
            ir,
            subscriptions,
            default_input,
            min_period,
            last_eval: None,
            last_seen: IndexMap::new(),
        })
    }

    pub fn name(&self) -> &str {
        &self.ir.name
    }

    pub fn ir(&self) -> &TriggerIr {
        &self.ir
    }

    pub fn subscriptions(&self) -> &[String] {
        &self.subscriptions
    }

    pub fn min_period(&self) -> Nanos {
        self.min_period
    }

    /// Both evaluation gates: unseen data on a subscription, and the
    /// frequency period elapsed since the last evaluation.
    pub fn should_evaluate(&self, cache: &DataCache, now: Nanos) -> bool {
        let period_elapsed = match self.last_eval {
            None => true,
            Some(last) => now.saturating_sub(last) >= self.min_period,
        };
        period_elapsed
            && cache.freshness(self.subscriptions.iter().map(String::as_str), &self.last_seen)
    }

    /// Evaluates the trigger over `view` and records what it consumed.
    /// `view` should cover the engine's subscriptions.
    pub fn evaluate(
        &mut self,
        view: &SituationView,
        registry: &PredicateRegistry,
        backend: &dyn PerceptionBackend,
        now: Nanos,
    ) -> EvalOutcome {
        let started = Instant::now();
        let mut bindings = Bindings::default();
        let mut predicates = Vec::with_capacity(self.ir.predicates.len());
        let mut verdict = true;
        let mut error = None;

        for pred in &self.ir.predicates {
            if !verdict {
                predicates.push(PredicateOutcome {
                    ptype: pred.ptype.clone(),
                    alias: pred.store_as.clone(),
                    status: PredicateStatus::Skipped,
                });
                continue;
            }
            match self.run_predicate(pred, view, &bindings, registry, backend) {
                Ok(value) => {
                    let conjunct = value.verdict != pred.not;
                    predicates.push(PredicateOutcome {
                        ptype: pred.ptype.clone(),
                        alias: pred.store_as.clone(),
                        status: PredicateStatus::Evaluated {
                            verdict: value.verdict,
                        },
                    });
                    if let Some(alias) = pred.store_as.as_deref() {
                        bindings.bind(alias, value);
                    }
                    verdict = conjunct;
                }
                Err(e) => {
                    // Fail closed: an erroring trigger never fires.
                    predicates.push(PredicateOutcome {
                        ptype: pred.ptype.clone(),
                        alias: pred.store_as.clone(),
                        status: PredicateStatus::Failed {
                            error: e.to_string(),
                        },
                    });
                    error = Some(format!("{}: {e}", pred.ptype));
                    verdict = false;
                }
            }
        }

        self.last_eval = Some(now);
        for topic in &self.subscriptions {
            if let Some(sample) = view.get(topic) {
                self.last_seen.insert(topic.clone(), sample.seq);
            }
        }

        EvalOutcome {
            trigger_name: self.ir.name.clone(),
            verdict,
            predicates,
            eval_timestamp: now,
            duration_ns: started.elapsed().as_nanos() as u64,
            error,
        }
    }

    fn run_predicate(
        &self,
        pred: &PredicateIr,
        view: &SituationView,
        bindings: &Bindings,
        registry: &PredicateRegistry,
        backend: &dyn PerceptionBackend,
    ) -> Result<PredicateValue, RuntimeError> {
        let entry = registry
            .get(&pred.ptype)
            .ok_or_else(|| RuntimeError::UnknownPredicate(pred.ptype.clone()))?;

        let input = match pred.on.as_deref() {
            // An alias defined this cycle wins over a topic of the same name.
            Some(name) => match bindings.get(name) {
                Some(value) => binding_input(name, value)?,
                None => sample_input(self.view_sample(view, name)?),
            },
            // Implicit input always reads the topic, never bindings.
            None => {
                let topic = self
                    .default_input
                    .as_deref()
                    .ok_or(RuntimeError::NoDefaultInput)?;
                sample_input(self.view_sample(view, topic)?)
            }
        };

        Ok((entry.eval)(&EvalRequest {
            pred,
            input,
            backend,
        })?)
    }

    fn view_sample<'v>(
        &self,
        view: &'v SituationView,
        topic: &str,
    ) -> Result<&'v Sample, RuntimeError> {
        view.get(topic)
            .ok_or_else(|| RuntimeError::MissingInput(topic.to_string()))
    }
}

fn sample_input(sample: &Sample) -> PredicateInput<'_> {
    match &sample.value {
        SampleValue::Reference { reference } => PredicateInput::Image(reference),
        SampleValue::Detections(set) => PredicateInput::Set(set),
        SampleValue::Scalar(v) => PredicateInput::Scalar(v),
    }
}

fn binding_input<'b>(
    alias: &str,
    value: &'b PredicateValue,
) -> Result<PredicateInput<'b>, RuntimeError> {
    if let Some(set) = value.payload.as_set() {
        Ok(PredicateInput::Set(set))
    } else if let Some(scalar) = value.payload.as_scalar() {
        Ok(PredicateInput::Scalar(scalar))
    } else {
        Err(RuntimeError::EmptyBinding(alias.to_string()))
    }
}

/// Counters the manager keeps per trigger.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TriggerStats {
    pub evaluations: u64,
    /// Evaluations whose verdict was true.
    pub activations: u64,
    pub errors: u64,
    pub total_duration_ns: u64,
    pub max_duration_ns: u64,
}

impl TriggerStats {
    pub fn mean_duration_ns(&self) -> f64 {
        if self.evaluations == 0 {
            0.0
        } else {
            self.total_duration_ns as f64 / self.evaluations as f64
        }
    }
}

/// Receives every evaluation outcome together with the exact snapshot it was
/// computed from. Implemented by the capture logger; tests use closures.
pub trait OutcomeSink {
    fn accept(&mut self, outcome: &EvalOutcome, view: &SituationView) -> Result<(), String>;
}

impl<F> OutcomeSink for F
where
    F: FnMut(&EvalOutcome, &SituationView) -> Result<(), String>,
{
    fn accept(&mut self, outcome: &EvalOutcome, view: &SituationView) -> Result<(), String> {
        self(outcome, view)
    }
}

/// Polls all engines against the shared cache and forwards outcomes to a
/// sink. Engines are independent: one engine's error (or the sink rejecting
/// its outcome) never stalls the others.
pub struct TriggerManager {
    registry: Arc<PredicateRegistry>,
    backend: Arc<dyn PerceptionBackend>,
    cache: Arc<DataCache>,
    clock: Arc<dyn Clock>,
    engines: Vec<TriggerEngine>,
    stats: IndexMap<String, TriggerStats>,
    sink_errors: u64,
}

impl TriggerManager {
    pub fn new(
        registry: Arc<PredicateRegistry>,
        backend: Arc<dyn PerceptionBackend>,
        cache: Arc<DataCache>,
        clock: Arc<dyn Clock>,
    ) -> Self {
        TriggerManager {
            registry,
            backend,
            cache,
            clock,
            engines: Vec::new(),
            stats: IndexMap::new(),
            sink_errors: 0,
        }
    }

    /// Validates `ir` against the cache's declared topics and adds an engine
    /// for it.
    pub fn add_trigger(
        &mut self,
        ir: TriggerIr,
        default_input: Option<&str>,
    ) -> Result<(), Vec<IrDiagnostic>> {
        let engine = TriggerEngine::new(ir, &self.registry, &self.cache.topics(), default_input)?;
        self.stats.insert(engine.name().to_string(), TriggerStats::default());
        self.engines.push(engine);
        Ok(())
    }

    pub fn engines(&self) -> &[TriggerEngine] {
        &self.engines
    }

    /// One scheduling pass: evaluates every engine whose gates are open and
    /// forwards each outcome to the sink. Returns the number of evaluations.
    pub fn poll_once(&mut self, sink: &mut dyn OutcomeSink) -> usize {
        let now = self.clock.now();
        let mut evaluated = 0;
        for engine in &mut self.engines {
            if !engine.should_evaluate(&self.cache, now) {
                continue;
            }
            let view = self
                .cache
                .snapshot(engine.subscriptions().iter().map(String::as_str));
            let outcome = engine.evaluate(&view, &self.registry, self.backend.as_ref(), now);
            evaluated += 1;

            let stats = self.stats.entry(outcome.trigger_name.clone()).or_default();
            stats.evaluations += 1;
            stats.activations += u64::from(outcome.verdict);
            stats.errors += u64::from(outcome.error.is_some());
            stats.total_duration_ns += outcome.duration_ns;
            stats.max_duration_ns = stats.max_duration_ns.max(outcome.duration_ns);

            if sink.accept(&outcome, &view).is_err() {
                self.sink_errors += 1;
            }
        }
        evaluated
    }

    /// Polls until `stop` is set, sleeping `tick` between passes. The pass
    /// in flight when `stop` is raised completes before the loop returns.
    pub fn run(&mut self, sink: &mut dyn OutcomeSink, stop: &AtomicBool, tick: std::time::Duration) {
        while !stop.load(Ordering::SeqCst) {
            self.poll_once(sink);
            std::thread::sleep(tick);
        }
    }

    pub fn stats(&self) -> &IndexMap<String, TriggerStats> {
        &self.stats
    }

    /// Outcomes the sink rejected (each was retried by the sink itself, not
    /// by the manager).
    pub fn sink_errors(&self) -> u64 {
        self.sink_errors
    }
}
