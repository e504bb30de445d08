//! Capture logging: the OR gate over trigger outcomes.
//!
//! Every evaluation outcome flows into [`CaptureLogger::accept`]. A false
//! verdict is discarded; a true verdict captures the situation snapshot the
//! trigger saw. Outcomes whose evaluation timestamps fall within one
//! coalescing window (default 50 ms) merge into a single [`LogRecord`]
//! listing every active trigger, so a burst of simultaneous activations
//! persists the situation once rather than once per trigger.
//!
//! Records append to a JSONL stream; image/pointcloud payloads referenced by
//! the snapshot are copied into a `blobs/` directory under their content
//! hash, and the record's references are rewritten to point there.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cache::{SampleValue, SituationView};
use crate::clock::Nanos;
use crate::runtime::{EvalOutcome, OutcomeSink};

/// Default coalescing window: outcomes closer than this merge into one
/// record.
pub const DEFAULT_COALESCE_WINDOW: Nanos = 50_000_000;

/// One sample as captured in a record's snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub value: SampleValue,
    pub timestamp: Nanos,
    pub seq: u64,
}

/// One persisted capture: the triggers that fired and the data they saw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    /// Start of the coalescing window (first outcome's evaluation time).
    pub timestamp: Nanos,
    /// Names of the triggers whose verdict was true, deduplicated.
    pub active_triggers: Vec<String>,
    /// Union of the active triggers' subscription snapshots.
    pub snapshot: IndexMap<String, SnapshotEntry>,
    /// Full per-predicate detail of every contributing outcome.
    pub outcomes: Vec<EvalOutcome>,
}

#[derive(Debug, thiserror::Error)]
pub enum LoggerError {
    #[error("logger is closed")]
    Closed,
    #[error("write failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Counters exposed for run manifests and tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LoggerStats {
    pub records_written: u64,
    /// True-verdict outcomes merged into records.
    pub outcomes_recorded: u64,
    /// False-verdict outcomes the OR gate discarded.
    pub outcomes_ignored: u64,
    /// Individual write failures (a retry that succeeds still counts one).
    pub write_errors: u64,
    /// Records abandoned after the single retry also failed.
    pub dropped_records: u64,
    /// Snapshot references whose payload file could not be copied to blobs.
    pub blob_misses: u64,
}

struct LoggerInner {
    writer: Box<dyn Write + Send>,
    blob_dir: Option<PathBuf>,
    data_root: PathBuf,
    window: Nanos,
    pending: Option<LogRecord>,
    stats: LoggerStats,
    closed: bool,
}

/// Thread-safe OR-gate logger. `accept` may be called concurrently; records
/// land in the file in receipt order.
pub struct CaptureLogger {
    inner: Mutex<LoggerInner>,
}

impl CaptureLogger {
    /// Creates `captures.jsonl` and `blobs/` under `dir`.
    pub fn create(dir: impl AsRef<Path>) -> Result<Self, LoggerError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let blob_dir = dir.join("blobs");
        std::fs::create_dir_all(&blob_dir)?;
        let writer = File::create(dir.join("captures.jsonl"))?;
        Ok(Self::from_parts(Box::new(writer), Some(blob_dir)))
    }

    /// Logs to an arbitrary writer without a blob store (references are
    /// persisted as-is). Used by tests and dry runs.
    pub fn with_writer(writer: Box<dyn Write + Send>) -> Self {
        Self::from_parts(writer, None)
    }

    fn from_parts(writer: Box<dyn Write + Send>, blob_dir: Option<PathBuf>) -> Self {
        CaptureLogger {
            inner: Mutex::new(LoggerInner {
                writer,
                blob_dir,
                data_root: PathBuf::from("."),
                window: DEFAULT_COALESCE_WINDOW,
                pending: None,
                stats: LoggerStats::default(),
                closed: false,
            }),
        }
    }

    /// Changes the coalescing window (nanoseconds).
    pub fn set_coalesce_window(&self, window: Nanos) {
        self.lock().window = window;
    }

    /// Directory against which relative payload references resolve when
    /// copying blobs.
    pub fn set_data_root(&self, root: impl Into<PathBuf>) {
        self.lock().data_root = root.into();
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, LoggerInner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Feeds one outcome through the OR gate. Returns true when the outcome
    /// contributed to a (possibly still pending) record.
    pub fn accept(
        &self,
        outcome: &EvalOutcome,
        view: &SituationView,
    ) -> Result<bool, LoggerError> {
        let mut inner = self.lock();
        if inner.closed {
            return Err(LoggerError::Closed);
        }
        if !outcome.verdict {
            inner.stats.outcomes_ignored += 1;
            return Ok(false);
        }

        // A new window starts when the pending record's window has elapsed.
        let flush_first = matches!(
            &inner.pending,
            Some(rec) if outcome.eval_timestamp.saturating_sub(rec.timestamp) >= inner.window
        );
        if flush_first {
            inner.flush_pending();
        }

        let record = inner.pending.get_or_insert_with(|| LogRecord {
            timestamp: outcome.eval_timestamp,
            active_triggers: Vec::new(),
            snapshot: IndexMap::new(),
            outcomes: Vec::new(),
        });
        if !record.active_triggers.contains(&outcome.trigger_name) {
            record.active_triggers.push(outcome.trigger_name.clone());
        }
        for (topic, sample) in view.iter() {
            let newer = record
                .snapshot
                .get(topic)
                .is_none_or(|existing| sample.seq >= existing.seq);
            if newer {
                record.snapshot.insert(
                    topic.to_string(),
                    SnapshotEntry {
                        value: sample.value.clone(),
                        timestamp: sample.timestamp,
                        seq: sample.seq,
                    },
                );
            }
        }
        record.outcomes.push(outcome.clone());
        inner.stats.outcomes_recorded += 1;
        Ok(true)
    }

    /// Writes out any pending record and flushes the underlying stream.
    pub fn flush(&self) -> Result<(), LoggerError> {
        let mut inner = self.lock();
        inner.flush_pending();
        inner.writer.flush()?;
        Ok(())
    }

    /// Flushes and seals the logger. Idempotent; `accept` fails afterwards.
    pub fn close(&self) -> Result<(), LoggerError> {
        let mut inner = self.lock();
        if inner.closed {
            return Ok(());
        }
        inner.flush_pending();
        inner.writer.flush()?;
        inner.closed = true;
        Ok(())
    }

    pub fn stats(&self) -> LoggerStats {
        self.lock().stats
    }
}

impl LoggerInner {
    /// Finalizes the pending record: copies referenced payloads into the
    /// blob store and appends one JSONL line, retrying a failed write once
    /// before dropping the record.
    fn flush_pending(&mut self) {
        let Some(mut record) = self.pending.take() else {
            return;
        };
        if let Some(blob_dir) = self.blob_dir.clone() {
            for entry in record.snapshot.values_mut() {
                if let SampleValue::Reference { reference } = &entry.value {
                    match store_blob(&blob_dir, &self.data_root, reference) {
                        Some(stored) => entry.value = SampleValue::reference(&stored),
                        None => self.stats.blob_misses += 1,
                    }
                }
            }
        }

        let mut line = serde_json::to_string(&record).expect("LogRecord serializes");
        line.push('\n');
        for attempt in 0..2 {
            match self.writer.write_all(line.as_bytes()).and_then(|()| self.writer.flush()) {
                Ok(()) => {
                    self.stats.records_written += 1;
                    return;
                }
                Err(_) => {
                    self.stats.write_errors += 1;
                    if attempt == 1 {
                        self.stats.dropped_records += 1;
                    }
                }
            }
        }
    }
}

/// Copies the payload at `data_root/reference` into the blob store under its
/// content hash and returns the rewritten reference, or None when the source
/// cannot be read.
fn store_blob(blob_dir: &Path, data_root: &Path, reference: &str) -> Option<String> {
    let source = {
        let path = Path::new(reference);
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            data_root.join(path)
        }
    };
    let bytes = std::fs::read(&source).ok()?;
    let digest = hex::encode(Sha256::digest(&bytes));
    let name = match source.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{digest}.{ext}"),
        None => digest,
    };
    let target = blob_dir.join(&name);
    if !target.exists() {
        std::fs::write(&target, &bytes).ok()?;
    }
    Some(format!("blobs/{name}"))
}

impl OutcomeSink for CaptureLogger {
    fn accept(&mut self, outcome: &EvalOutcome, view: &SituationView) -> Result<(), String> {
        CaptureLogger::accept(self, outcome, view)
            .map(|_| ())
            .map_err(|e| e.to_string())
    }
}

/// Lets a shared logger serve as the manager's sink.
impl OutcomeSink for std::sync::Arc<CaptureLogger> {
    fn accept(&mut self, outcome: &EvalOutcome, view: &SituationView) -> Result<(), String> {
        CaptureLogger::accept(self, outcome, view)
            .map(|_| ())
            .map_err(|e| e.to_string())
    }
}
