//! Topic declarations: named, kind-typed channels of the data cache.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

/// Payload kind carried by a topic. Fixed at declaration time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopicKind {
    Image,
    Pointcloud,
    Scalar,
    DetectionSet,
}

impl TopicKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TopicKind::Image => "image",
            TopicKind::Pointcloud => "pointcloud",
            TopicKind::Scalar => "scalar",
            TopicKind::DetectionSet => "detection-set",
        }
    }
}

impl std::fmt::Display for TopicKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topic {
    pub name: String,
    pub kind: TopicKind,
    /// Unit of measurement for scalar topics (e.g. "m/s").
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TopicError {
    #[error("topic '{0}' declared twice")]
    Duplicate(String),
    #[error("invalid topics config: {0}")]
    BadConfig(String),
}

/// The set of declared topics, in declaration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TopicSet {
    topics: IndexMap<String, Topic>,
}

impl TopicSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, topic: Topic) -> Result<(), TopicError> {
        if self.topics.contains_key(&topic.name) {
            return Err(TopicError::Duplicate(topic.name));
        }
        self.topics.insert(topic.name.clone(), topic);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Topic> {
        self.topics.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.topics.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Topic> {
        self.topics.values()
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    /// Loads a `topics.json` document: a JSON array of
    /// `{name, kind, unit?}` objects.
    pub fn from_json_str(text: &str) -> Result<Self, TopicError> {
        let list: Vec<Topic> =
            serde_json::from_str(text).map_err(|e| TopicError::BadConfig(e.to_string()))?;
        let mut set = TopicSet::new();
        for topic in list {
            set.declare(topic)?;
        }
        Ok(set)
    }

    pub fn to_json_string(&self) -> String {
        let list: Vec<&Topic> = self.topics.values().collect();
        serde_json::to_string_pretty(&list).expect("topic serialization cannot fail")
    }
}

impl FromIterator<Topic> for TopicSet {
    fn from_iter<I: IntoIterator<Item = Topic>>(iter: I) -> Self {
        let mut set = TopicSet::new();
        for topic in iter {
            set.declare(topic).expect("duplicate topic in iterator");
        }
        set
    }
}
