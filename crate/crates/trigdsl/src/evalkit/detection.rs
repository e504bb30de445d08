//! Detection evaluation: trigger verdicts against hand-labeled ground truth.
//!
//! A [`Corpus`] is an ordered list of situations — each an image reference
//! plus per-query Boolean labels. [`detection_eval`] executes one trigger
//! sequentially over every situation and scores its verdicts against the
//! labels of one query, yielding counts and precision/recall/F1.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::EvalkitError;
use crate::cache::{DataCache, SampleValue};
use crate::clock::Nanos;
use crate::ir::TriggerIr;
use crate::predicates::{PerceptionBackend, PredicateRegistry};
use crate::runtime::TriggerEngine;
use crate::topic::{Topic, TopicKind, TopicSet};

fn default_topic() -> String {
    "camera".to_string()
}

/// One labeled situation: an image and its ground truth per query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSituation {
    pub id: String,
    /// Image reference handed to the perception backend.
    pub image: String,
    /// Query id → whether this situation satisfies the query.
    pub labels: IndexMap<String, bool>,
}

/// A labeled evaluation corpus (`corpus.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    /// Topic the images are published on; triggers read it as their
    /// implicit input.
    #[serde(default = "default_topic")]
    pub topic: String,
    pub situations: Vec<LabeledSituation>,
}

impl Corpus {
    pub fn from_json_str(text: &str) -> Result<Self, EvalkitError> {
        serde_json::from_str(text).map_err(|e| EvalkitError::Corpus(e.to_string()))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, EvalkitError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| EvalkitError::Corpus(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// The single-topic set and cache the corpus evaluates against.
    pub fn topics(&self) -> TopicSet {
        [Topic {
            name: self.topic.clone(),
            kind: TopicKind::Image,
            unit: None,
        }]
        .into_iter()
        .collect()
    }

    pub fn len(&self) -> usize {
        self.situations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.situations.is_empty()
    }
}

/// Confusion counts and derived rates for one trigger on one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when the trigger failed instantiation; counts are then zero.
    #[serde(skip_serializing_if = "Option::is_none")]
    #[serde(default)]
    pub invalid: Option<String>,
}

impl DetectionReport {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        DetectionReport {
            tp,
            fp,
            fn_,
            tn,
            precision,
            recall,
            f1,
            invalid: None,
        }
    }

    /// Sums counts across reports and recomputes the rates.
    pub fn merged<'a>(reports: impl IntoIterator<Item = &'a DetectionReport>) -> Self {
        let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
        for report in reports {
            tp += report.tp;
            fp += report.fp;
            fn_ += report.fn_;
            tn += report.tn;
        }
        DetectionReport::from_counts(tp, fp, fn_, tn)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Executes `ir` sequentially over every corpus situation and scores its
/// verdicts against the `label` column. Instantiation failure returns a
/// report marked invalid rather than an error.
pub fn detection_eval(
    ir: &TriggerIr,
    label: &str,
    corpus: &Corpus,
    registry: &PredicateRegistry,
    backend: &dyn PerceptionBackend,
) -> Result<DetectionReport, EvalkitError> {
    let topics = corpus.topics();
    let mut engine = match TriggerEngine::new(ir.clone(), registry, &topics, Some(&corpus.topic)) {
        Ok(engine) => engine,
        Err(diagnostics) => {
            let mut report = DetectionReport::from_counts(0, 0, 0, 0);
            report.invalid = Some(
                diagnostics
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join("; "),
            );
            return Ok(report);
        }
    };

    let cache = DataCache::with_topics(&topics);
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (index, situation) in corpus.situations.iter().enumerate() {
        let truth = *situation.labels.get(label).ok_or_else(|| {
            EvalkitError::MissingLabel {
                situation: situation.id.clone(),
                query: label.to_string(),
            }
        })?;
        let now = index as Nanos;
        cache
            .publish(&corpus.topic, SampleValue::reference(&situation.image), now)
            .map_err(|e| EvalkitError::Corpus(e.to_string()))?;
        let view = cache.snapshot([corpus.topic.as_str()]);
        let verdict = engine.evaluate(&view, registry, backend, now).verdict;
        match (verdict, truth) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(DetectionReport::from_counts(tp, fp, fn_, tn))
}

/// Query categories of the evaluation protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryCategory {
    Single,
    Conditional,
    Reasoning,
}

impl QueryCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            QueryCategory::Single => "single",
            QueryCategory::Conditional => "conditional",
            QueryCategory::Reasoning => "reasoning",
        }
    }
}

/// One query's evaluation: its category and detection report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryEval {
    pub query: String,
    pub category: QueryCategory,
    pub report: DetectionReport,
}

/// Per-query reports with per-category and overall aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionSummary {
    pub queries: Vec<QueryEval>,
    pub by_category: IndexMap<String, DetectionReport>,
    pub overall: DetectionReport,
}

impl DetectionSummary {
    pub fn from_queries(queries: Vec<QueryEval>) -> Self {
        let mut by_category: IndexMap<String, DetectionReport> = IndexMap::new();
        for category in [
            QueryCategory::Single,
            QueryCategory::Conditional,
            QueryCategory::Reasoning,
        ] {
            let members: Vec<&DetectionReport> = queries
                .iter()
                .filter(|q| q.category == category)
                .map(|q| &q.report)
                .collect();
            if !members.is_empty() {
                by_category.insert(
                    category.as_str().to_string(),
                    DetectionReport::merged(members),
                );
            }
        }
        let overall = DetectionReport::merged(queries.iter().map(|q| &q.report));
        DetectionSummary {
            queries,
            by_category,
            overall,
        }
    }

    /// Aligned-column rendering: one row per query, then categories and the
    /// overall line.
    pub fn to_text_table(&self) -> String {
        let row = |name: &str, r: &DetectionReport| {
            vec![
                name.to_string(),
                r.tp.to_string(),
                r.fp.to_string(),
                r.fn_.to_string(),
                r.tn.to_string(),
                format!("{:.3}", r.precision),
                format!("{:.3}", r.recall),
                format!("{:.3}", r.f1),
            ]
        };
        let mut rows: Vec<Vec<String>> = self
            .queries
            .iter()
            .map(|q| row(&q.query, &q.report))
            .collect();
        for (category, report) in &self.by_category {
            rows.push(row(&format!("[{category}]"), report));
        }
        rows.push(row("[overall]", &self.overall));
        super::text_table(
            &["query", "tp", "fp", "fn", "tn", "precision", "recall", "f1"],
            &rows,
        )
    }
}
