//! Runtime measurement: end-to-end trigger evaluation durations.
//!
//! Each trigger runs `repetitions` sequential passes over the corpus. The
//! first pass is a warm-up and is excluded; every later evaluation
//! contributes one duration sample. Only triggers that produced at least
//! one true positive appear in the report — a trigger that never correctly
//! fires has no meaningful runtime story.

use serde::{Deserialize, Serialize};

use super::detection::Corpus;
use super::EvalkitError;
use crate::cache::{DataCache, SampleValue};
use crate::clock::Nanos;
use crate::ir::TriggerIr;
use crate::predicates::{PerceptionBackend, PredicateRegistry};
use crate::runtime::TriggerEngine;

/// Duration distribution of one trigger across all measured evaluations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerTiming {
    pub trigger: String,
    /// Measured evaluations (warm-up pass excluded).
    pub samples: u64,
    pub mean_ns: f64,
    pub p50_ns: u64,
    pub p95_ns: u64,
    pub max_ns: u64,
    pub true_positives: u64,
}

/// Per-trigger timing distributions; zero-true-positive triggers filtered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeReport {
    pub repetitions: usize,
    pub timings: Vec<TriggerTiming>,
}

impl RuntimeReport {
    pub fn to_text_table(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .timings
            .iter()
            .map(|t| {
                vec![
                    t.trigger.clone(),
                    t.samples.to_string(),
                    format!("{:.0}", t.mean_ns),
                    t.p50_ns.to_string(),
                    t.p95_ns.to_string(),
                    t.max_ns.to_string(),
                    t.true_positives.to_string(),
                ]
            })
            .collect();
        super::text_table(
            &["trigger", "samples", "mean_ns", "p50_ns", "p95_ns", "max_ns", "tp"],
            &rows,
        )
    }
}

/// Nearest-rank percentile of an ascending-sorted slice.
fn percentile(sorted: &[u64], p: f64) -> u64 {
    let rank = (p / 100.0 * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Times each `(trigger, label)` pair over the corpus. `repetitions` counts
/// all passes including the excluded warm-up and must be at least 3.
pub fn runtime_bench(
    triggers: &[(&TriggerIr, &str)],
    corpus: &Corpus,
    registry: &PredicateRegistry,
    backend: &dyn PerceptionBackend,
    repetitions: usize,
) -> Result<RuntimeReport, EvalkitError> {
    if repetitions < 3 {
        return Err(EvalkitError::BadRepetitions(repetitions));
    }
    let topics = corpus.topics();
    let mut timings = Vec::new();

    for (ir, label) in triggers {
        let mut engine = TriggerEngine::new((*ir).clone(), registry, &topics, Some(&corpus.topic))
            .map_err(|diagnostics| EvalkitError::InvalidTrigger {
                trigger: ir.name.clone(),
                detail: diagnostics
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join("; "),
            })?;

        let cache = DataCache::with_topics(&topics);
        let mut durations: Vec<u64> = Vec::new();
        let mut true_positives = 0u64;
        let mut tick: Nanos = 0;
        for repetition in 0..repetitions {
            for situation in &corpus.situations {
                let truth = *situation.labels.get(*label).ok_or_else(|| {
                    EvalkitError::MissingLabel {
                        situation: situation.id.clone(),
                        query: (*label).to_string(),
                    }
                })?;
                cache
                    .publish(&corpus.topic, SampleValue::reference(&situation.image), tick)
                    .map_err(|e| EvalkitError::Corpus(e.to_string()))?;
                let view = cache.snapshot([corpus.topic.as_str()]);
                let outcome = engine.evaluate(&view, registry, backend, tick);
                tick += 1;
                if repetition == 0 {
                    // Warm-up pass: verdicts are deterministic, so count the
                    // true positives here and skip the timing sample.
                    true_positives += u64::from(outcome.verdict && truth);
                } else {
                    durations.push(outcome.duration_ns);
                }
            }
        }

        if true_positives == 0 {
            continue;
        }
        durations.sort_unstable();
        timings.push(TriggerTiming {
            trigger: ir.name.clone(),
            samples: durations.len() as u64,
            mean_ns: durations.iter().sum::<u64>() as f64 / durations.len() as f64,
            p50_ns: percentile(&durations, 50.0),
            p95_ns: percentile(&durations, 95.0),
            max_ns: *durations.last().expect("nonempty measured pass"),
            true_positives,
        });
    }

    Ok(RuntimeReport {
        repetitions,
        timings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_one;
    use crate::evalkit::detection::LabeledSituation;
    use crate::ir::compile;
    use crate::predicates::{BackendError, Capabilities, Detection};
    use indexmap::IndexMap;

    struct MapBackend {
        images: IndexMap<String, Vec<Detection>>,
    }

    impl PerceptionBackend for MapBackend {
        fn capabilities(&self) -> Capabilities {
            Capabilities {
                object_detection: true,
                attribute_scoring: false,
            }
        }
        fn detect_objects(&self, image: &str) -> Result<Vec<Detection>, BackendError> {
            Ok(self.images.get(image).cloned().unwrap_or_default())
        }
        fn score_attribute(&self, _: &str, _: &str) -> Result<f64, BackendError> {
            Ok(0.0)
        }
        fn score_detection(&self, _: &Detection, _: &str) -> Result<f64, BackendError> {
            Ok(0.0)
        }
    }

    fn fixture() -> (Corpus, MapBackend) {
        let mut situations = Vec::new();
        let mut images = IndexMap::new();
        for i in 0..5usize {
            let image = format!("img{i}.ppm");
            let cars = vec![Detection::new("car", 0.9, [0.1, 0.1, 0.2, 0.2]); i];
            images.insert(image.clone(), cars);
            situations.push(LabeledSituation {
                id: format!("s{i}"),
                image,
                labels: [
                    ("has_car".to_string(), i > 0),
                    ("has_train".to_string(), false),
                ]
                .into_iter()
                .collect(),
            });
        }
        (
            Corpus {
                topic: "camera".to_string(),
                situations,
            },
            MapBackend { images },
        )
    }

    fn trigger(source: &str) -> TriggerIr {
        compile(&parse_one(source).unwrap())
    }

    #[test]
    fn repetitions_below_three_are_rejected() {
        let (corpus, backend) = fixture();
        let registry = PredicateRegistry::with_builtins();
        let ir = trigger(r#"TRIGGER t { PREDICATE(detect, class="car") }"#);
        let err = runtime_bench(&[(&ir, "has_car")], &corpus, &registry, &backend, 1).unwrap_err();
        assert!(matches!(err, EvalkitError::BadRepetitions(1)));
    }

    #[test]
    fn warmup_is_excluded_and_percentiles_are_ordered() {
        let (corpus, backend) = fixture();
        let registry = PredicateRegistry::with_builtins();
        let ir = trigger(r#"TRIGGER cars { PREDICATE(detect, class="car") }"#);
        let report =
            runtime_bench(&[(&ir, "has_car")], &corpus, &registry, &backend, 4).unwrap();
        assert_eq!(report.timings.len(), 1);
        let timing = &report.timings[0];
        // 4 passes × 5 situations, minus the 5-sample warm-up pass.
        assert_eq!(timing.samples, 15);
        assert_eq!(timing.true_positives, 4);
        assert!(timing.p50_ns <= timing.p95_ns);
        assert!(timing.p95_ns <= timing.max_ns);
        assert!(timing.mean_ns > 0.0);
    }

    #[test]
    fn zero_true_positive_triggers_are_filtered() {
        let (corpus, backend) = fixture();
        let registry = PredicateRegistry::with_builtins();
        let cars = trigger(r#"TRIGGER cars { PREDICATE(detect, class="car") }"#);
        // Fires never: no trains in any image.
        let trains = trigger(r#"TRIGGER trains { PREDICATE(detect, class="train") }"#);
        let report = runtime_bench(
            &[(&cars, "has_car"), (&trains, "has_train")],
            &corpus,
            &registry,
            &backend,
            3,
        )
        .unwrap();
        let names: Vec<&str> = report.timings.iter().map(|t| t.trigger.as_str()).collect();
        assert_eq!(names, ["cars"]);
        assert!(report.to_text_table().contains("cars"));
    }

    #[test]
    fn invalid_trigger_is_an_error() {
        let (corpus, backend) = fixture();
        let registry = PredicateRegistry::with_builtins();
        let bad = trigger(r#"TRIGGER bad { PREDICATE(teleport) }"#);
        let err =
            runtime_bench(&[(&bad, "has_car")], &corpus, &registry, &backend, 3).unwrap_err();
        assert!(matches!(err, EvalkitError::InvalidTrigger { .. }));
    }

    #[test]
    fn percentile_is_nearest_rank() {
        let sorted = [10u64, 20, 30, 40];
        assert_eq!(percentile(&sorted, 50.0), 20);
        assert_eq!(percentile(&sorted, 95.0), 40);
        assert_eq!(percentile(&[7], 50.0), 7);
        assert_eq!(percentile(&[7], 95.0), 7);
    }
}
