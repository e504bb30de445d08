//! Perception backends: who answers "what is in this image?".
//!
//! The oracle backend reads ground-truth sidecar files and keeps the whole
//! pipeline deterministic and offline. The external backend forwards requests
//! to a detection/scoring service over line-delimited JSON, standing in for
//! real model servers.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::time::Duration;

use indexmap::IndexMap;
use serde::Deserialize;
use serde_json::json;

use crate::predicates::types::Detection;

/// What a backend can answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Capabilities {
    pub object_detection: bool,
    pub attribute_scoring: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("perception backend unavailable: {0}")]
    Unavailable(String),
    #[error("annotation {path}: {message}")]
    Annotation { path: String, message: String },
    #[error("backend protocol error: {0}")]
    Protocol(String),
}

pub trait PerceptionBackend: Send + Sync {
    fn capabilities(&self) -> Capabilities;

    /// All detections for the referenced image (unfiltered).
    fn detect_objects(&self, image: &str) -> Result<Vec<Detection>, BackendError>;

    /// Score of a text query against the whole image, in `[0, 1]`.
    fn score_attribute(&self, image: &str, query: &str) -> Result<f64, BackendError>;

    /// Score of a text query against one detection crop, in `[0, 1]`.
    fn score_detection(&self, detection: &Detection, query: &str) -> Result<f64, BackendError>;
}

/// Sidecar annotation document stored next to each image as
/// `<image>.ann.json`.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct Annotation {
    #[serde(default)]
    pub detections: Vec<Detection>,
    /// Whole-image attribute scores keyed by query text.
    #[serde(default)]
    pub scores: IndexMap<String, f64>,
}

/// Deterministic backend that reads ground-truth sidecars instead of running
/// models. Byte-identical inputs produce byte-identical outputs.
#[derive(Debug, Clone, Default)]
pub struct OracleBackend {
    base_dir: PathBuf,
}

impl OracleBackend {
    /// Relative image references resolve against `base_dir`.
    pub fn new(base_dir: impl Into<PathBuf>) -> Self {
        OracleBackend {
            base_dir: base_dir.into(),
        }
    }

    fn annotation(&self, image: &str) -> Result<Annotation, BackendError> {
        let image_path = if Path::new(image).is_absolute() {
            PathBuf::from(image)
        } else {
            self.base_dir.join(image)
        };
        let mut ann_path = image_path.into_os_string();
        ann_path.push(".ann.json");
        let ann_path = PathBuf::from(ann_path);
        let text = std::fs::read_to_string(&ann_path).map_err(|e| BackendError::Annotation {
            path: ann_path.display().to_string(),
            message: e.to_string(),
        })?;
        serde_json::from_str(&text).map_err(|e| BackendError::Annotation {
            path: ann_path.display().to_string(),
            message: e.to_string(),
        })
    }
}

impl PerceptionBackend for OracleBackend {
    fn capabilities(&self) -> Capabilities {
        Capabilities {
            object_detection: true,
            attribute_scoring: true,
        }
    }

    fn detect_objects(&self, image: &str) -> Result<Vec<Detection>, BackendError> {
        Ok(self.annotation(image)?.detections)
    }

    fn score_attribute(&self, image: &str, query: &str) -> Result<f64, BackendError> {
        // Queries absent from the sidecar score zero: deterministic "no".
        Ok(self
            .annotation(image)?
            .scores
            .get(query)
            .copied()
            .unwrap_or(0.0))
    }

    fn score_detection(&self, detection: &Detection, query: &str) -> Result<f64, BackendError> {
        Ok(detection.numeric_attribute(query).unwrap_or(0.0))
    }
}

/// Environment variable naming the external backend endpoint (`host:port`).
pub const BACKEND_URL_ENV: &str = "TRIGDSL_BACKEND_URL";

/// Default request timeout for the external backend.
pub const DEFAULT_BACKEND_TIMEOUT: Duration = Duration::from_secs(2);

/// Backend that forwards to an external detection/scoring service speaking
/// line-delimited JSON over TCP: one request object per line, one response
/// object per line. Responses are `{"ok": true, "detections": [...]}`,
/// `{"ok": true, "score": 0.93}`, or `{"ok": false, "error": "..."}`.
#[derive(Debug, Clone)]
pub struct ExternalBackend {
    addr: String,
    timeout: Duration,
}

impl ExternalBackend {
    pub fn new(addr: impl Into<String>) -> Self {
        ExternalBackend {
            addr: addr.into(),
            timeout: DEFAULT_BACKEND_TIMEOUT,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    /// Reads the endpoint from `TRIGDSL_BACKEND_URL`.
    pub fn from_env() -> Result<Self, BackendError> {
        match std::env::var(BACKEND_URL_ENV) {
            Ok(addr) if !addr.is_empty() => Ok(ExternalBackend::new(addr)),
            _ => Err(BackendError::Unavailable(format!(
                "{BACKEND_URL_ENV} is not set"
            ))),
        }
    }

    fn roundtrip(&self, request: &serde_json::Value) -> Result<serde_json::Value, BackendError> {
        let addr = self
            .addr
            .to_socket_addrs()
            .map_err(|e| BackendError::Unavailable(format!("{}: {e}", self.addr)))?
            .next()
            .ok_or_else(|| {
                BackendError::Unavailable(format!("{} resolves to no address", self.addr))
            })?;
        let stream = TcpStream::connect_timeout(&addr, self.timeout)
            .map_err(|e| BackendError::Unavailable(format!("{}: {e}", self.addr)))?;
        stream
            .set_read_timeout(Some(self.timeout))
            .and_then(|()| stream.set_write_timeout(Some(self.timeout)))
            .map_err(|e| BackendError::Unavailable(e.to_string()))?;

        let mut writer = stream
            .try_clone()
            .map_err(|e| BackendError::Unavailable(e.to_string()))?;
        let mut line = serde_json::to_string(request).expect("request serialization");
        line.push('\n');
        writer
            .write_all(line.as_bytes())
            .map_err(|e| BackendError::Unavailable(e.to_string()))?;

        let mut response = String::new();
        BufReader::new(stream)
            .read_line(&mut response)
            .map_err(|e| BackendError::Unavailable(e.to_string()))?;
        let parsed: serde_json::Value = serde_json::from_str(response.trim())
            .map_err(|e| BackendError::Protocol(format!("bad response JSON: {e}")))?;

        if parsed.get("ok").and_then(serde_json::Value::as_bool) == Some(true) {
            Ok(parsed)
        } else {
            let message = parsed
                .get("error")
                .and_then(serde_json::Value::as_str)
                .unwrap_or("request refused");
            Err(BackendError::Protocol(message.to_string()))
        }
    }

    fn score_from(&self, response: serde_json::Value) -> Result<f64, BackendError> {
        response
            .get("score")
            .and_then(serde_json::Value::as_f64)
            .ok_or_else(|| BackendError::Protocol("response lacks a numeric 'score'".into()))
    }
}

impl PerceptionBackend for ExternalBackend {
    fn capabilities(&self) -> Capabilities {
        Capabilities {
            object_detection: true,
            attribute_scoring: true,
        }
    }

    fn detect_objects(&self, image: &str) -> Result<Vec<Detection>, BackendError> {
        let response = self.roundtrip(&json!({"op": "detect", "image": image}))?;
        let detections = response
            .get("detections")
            .cloned()
            .ok_or_else(|| BackendError::Protocol("response lacks 'detections'".into()))?;
        serde_json::from_value(detections)
            .map_err(|e| BackendError::Protocol(format!("bad detections payload: {e}")))
    }

    fn score_attribute(&self, image: &str, query: &str) -> Result<f64, BackendError> {
        let response =
            self.roundtrip(&json!({"op": "score", "image": image, "query": query}))?;
        self.score_from(response)
    }

    fn score_detection(&self, detection: &Detection, query: &str) -> Result<f64, BackendError> {
        let detection = serde_json::to_value(detection).expect("detection serialization");
        let response = self.roundtrip(&json!({
            "op": "score_detection",
            "detection": detection,
            "query": query,
        }))?;
        self.score_from(response)
    }
}
