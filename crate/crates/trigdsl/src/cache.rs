//! The Data Manager's cache: the current situation as the most recent
//! timestamped sample per topic.
//!
//! The cache has depth 1 — it is a routing structure, not a recorder.
//! Publishers overwrite the latest sample of their topic; trigger engines
//! take atomic [`SituationView`] snapshots and poll [`DataCache::freshness`]
//! with the sequence numbers they have already seen. Large payloads (images,
//! pointclouds) are stored by reference, not by value.

use std::sync::RwLock;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::clock::Nanos;
use crate::predicates::Detection;
use crate::topic::{Topic, TopicKind, TopicSet};
use crate::value::Value;

/// Payload of one sample. The JSON forms are disjoint: references are
/// `{"ref": "..."}` objects, detection sets are arrays, scalars are bare
/// JSON scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SampleValue {
    /// Content-addressed reference to an image or pointcloud payload
    /// (a file path or blob id).
    Reference {
        #[serde(rename = "ref")]
        reference: String,
    },
    Detections(Vec<Detection>),
    Scalar(Value),
}

impl SampleValue {
    pub fn reference(path: impl Into<String>) -> Self {
        SampleValue::Reference {
            reference: path.into(),
        }
    }

    pub fn as_reference(&self) -> Option<&str> {
        match self {
            SampleValue::Reference { reference } => Some(reference),
            _ => None,
        }
    }

    pub fn as_scalar(&self) -> Option<&Value> {
        match self {
            SampleValue::Scalar(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_detections(&self) -> Option<&[Detection]> {
        match self {
            SampleValue::Detections(d) => Some(d),
            _ => None,
        }
    }

    /// Whether this payload form is valid for a topic of `kind`.
    pub fn matches(&self, kind: TopicKind) -> bool {
        match self {
            SampleValue::Reference { .. } => {
                matches!(kind, TopicKind::Image | TopicKind::Pointcloud)
            }
            SampleValue::Detections(_) => kind == TopicKind::DetectionSet,
            SampleValue::Scalar(_) => kind == TopicKind::Scalar,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            SampleValue::Reference { .. } => "reference",
            SampleValue::Detections(_) => "detection-set",
            SampleValue::Scalar(_) => "scalar",
        }
    }
}

/// One cached sample: the latest value of a topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub topic: String,
    /// Monotonic nanoseconds at publish time.
    pub timestamp: Nanos,
    /// Per-topic counter, strictly increasing; assigned by the cache.
    pub seq: u64,
    pub value: SampleValue,
}

/// One line of a replay stream: a sample before the cache assigns its seq.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSample {
    pub topic: String,
    pub timestamp: Nanos,
    pub value: SampleValue,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CacheError {
    #[error("topic '{0}' is already declared")]
    DuplicateTopic(String),
    #[error("topic '{0}' is not declared")]
    UndeclaredTopic(String),
    #[error("topic '{topic}' carries {expected}, got a {got} payload")]
    KindMismatch {
        topic: String,
        expected: TopicKind,
        got: &'static str,
    },
    #[error(
        "timestamp regression on '{topic}': latest is {latest} ns, sample at {attempted} ns dropped"
    )]
    TimestampRegression {
        topic: String,
        latest: Nanos,
        attempted: Nanos,
    },
}

struct TopicSlot {
    topic: Topic,
    latest: Option<Sample>,
}

/// Thread-safe latest-wins cache over declared topics.
#[derive(Default)]
pub struct DataCache {
    slots: RwLock<IndexMap<String, TopicSlot>>,
}

impl DataCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// A cache with all topics of `topics` declared.
    pub fn with_topics(topics: &TopicSet) -> Self {
        let cache = Self::new();
        for topic in topics.iter() {
            cache.declare(topic.clone()).expect("topic set has unique names");
        }
        cache
    }

    pub fn declare(&self, topic: Topic) -> Result<(), CacheError> {
        let mut slots = self.slots.write().unwrap();
        if slots.contains_key(&topic.name) {
            return Err(CacheError::DuplicateTopic(topic.name));
        }
        slots.insert(
            topic.name.clone(),
            TopicSlot {
                topic,
                latest: None,
            },
        );
        Ok(())
    }

    pub fn contains(&self, topic: &str) -> bool {
        self.slots.read().unwrap().contains_key(topic)
    }

    pub fn topic_kind(&self, topic: &str) -> Option<TopicKind> {
        self.slots.read().unwrap().get(topic).map(|s| s.topic.kind)
    }

    /// The declared topics, in declaration order.
    pub fn topics(&self) -> TopicSet {
        self.slots
            .read()
            .unwrap()
            .values()
            .map(|slot| slot.topic.clone())
            .collect()
    }

    /// Stores a sample as its topic's latest value and returns the assigned
    /// sequence number. Samples older than the topic's latest are dropped.
    pub fn publish(
        &self,
        topic: &str,
        value: SampleValue,
        timestamp: Nanos,
    ) -> Result<u64, CacheError> {
        let mut slots = self.slots.write().unwrap();
        let slot = slots
            .get_mut(topic)
            .ok_or_else(|| CacheError::UndeclaredTopic(topic.to_string()))?;
        if !value.matches(slot.topic.kind) {
            return Err(CacheError::KindMismatch {
                topic: topic.to_string(),
                expected: slot.topic.kind,
                got: value.kind_name(),
            });
        }
        if let Some(latest) = &slot.latest {
            if timestamp < latest.timestamp {
                return Err(CacheError::TimestampRegression {
                    topic: topic.to_string(),
                    latest: latest.timestamp,
                    attempted: timestamp,
                });
            }
        }
        let seq = slot.latest.as_ref().map_or(0, |s| s.seq) + 1;
        slot.latest = Some(Sample {
            topic: topic.to_string(),
            timestamp,
            seq,
            value,
        });
        Ok(seq)
    }

    /// Publishes one replay-stream sample.
    pub fn publish_stream(&self, sample: &StreamSample) -> Result<u64, CacheError> {
        self.publish(&sample.topic, sample.value.clone(), sample.timestamp)
    }

    /// Atomic snapshot of the requested topics. Topics never published (or
    /// not declared) are absent from the view.
    pub fn snapshot<'a>(&self, topics: impl IntoIterator<Item = &'a str>) -> SituationView {
        let slots = self.slots.read().unwrap();
        let mut samples = IndexMap::new();
        for name in topics {
            if let Some(sample) = slots.get(name).and_then(|slot| slot.latest.clone()) {
                samples.insert(name.to_string(), sample);
            }
        }
        SituationView { samples }
    }

    /// True iff any requested topic has a sample newer than `since` records
    /// (absent `since` entries count as seq 0; absent topics are never fresh).
    pub fn freshness<'a>(
        &self,
        topics: impl IntoIterator<Item = &'a str>,
        since: &IndexMap<String, u64>,
    ) -> bool {
        let slots = self.slots.read().unwrap();
        topics.into_iter().any(|name| {
            let current = slots
                .get(name)
                .and_then(|slot| slot.latest.as_ref())
                .map_or(0, |sample| sample.seq);
            current > since.get(name).copied().unwrap_or(0)
        })
    }

    /// Current sequence number per requested topic (unpublished → absent).
    pub fn seqs<'a>(&self, topics: impl IntoIterator<Item = &'a str>) -> IndexMap<String, u64> {
        let slots = self.slots.read().unwrap();
        topics
            .into_iter()
            .filter_map(|name| {
                let seq = slots.get(name)?.latest.as_ref()?.seq;
                Some((name.to_string(), seq))
            })
            .collect()
    }
}

/// An immutable, internally consistent snapshot: topic → its latest sample
/// at snapshot time.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SituationView {
    samples: IndexMap<String, Sample>,
}

impl SituationView {
    pub fn get(&self, topic: &str) -> Option<&Sample> {
        self.samples.get(topic)
    }

    pub fn contains(&self, topic: &str) -> bool {
        self.samples.contains_key(topic)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Sample)> {
        self.samples.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}
