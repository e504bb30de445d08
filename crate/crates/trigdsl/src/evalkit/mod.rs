//! Evaluation toolkit: generation-consistency metrics, detection
//! precision/recall/F1 against labeled corpora, and runtime measurement.
//!
//! All metric functions are pure, and detection/runtime evaluation runs
//! strictly sequentially, so every report is reproducible given the same
//! corpus and backend.

mod bench;
mod detection;
mod similarity;

pub use bench::{runtime_bench, RuntimeReport, TriggerTiming};
pub use detection::{
    detection_eval, Corpus, DetectionReport, DetectionSummary, LabeledSituation, QueryCategory,
    QueryEval,
};
pub use similarity::{
    consistency_eval, cosine_similarity, levenshtein_distance, levenshtein_similarity,
    sequence_similarity, MetricAggregate, PairScores, SimilarityReport,
};

#[derive(Debug, thiserror::Error)]
pub enum EvalkitError {
    #[error("no pairs to evaluate")]
    EmptyPairs,
    #[error("situation '{situation}' has no label for query '{query}'")]
    MissingLabel { situation: String, query: String },
    #[error("repetitions must be at least 3, got {0}")]
    BadRepetitions(usize),
    #[error("trigger '{trigger}' failed validation: {detail}")]
    InvalidTrigger { trigger: String, detail: String },
    #[error("corpus: {0}")]
    Corpus(String),
}

/// Renders rows as aligned columns: each column as wide as its widest cell,
/// two spaces between columns, no trailing whitespace.
pub fn text_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let columns = headers.len();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate().take(columns) {
            widths[i] = widths[i].max(cell.chars().count());
        }
    }
    let render = |cells: &[String]| -> String {
        let mut line = String::new();
        for (i, cell) in cells.iter().enumerate().take(columns) {
            if i > 0 {
                line.push_str("  ");
            }
            line.push_str(cell);
            if i + 1 < columns {
                for _ in cell.chars().count()..widths[i] {
                    line.push(' ');
                }
            }
        }
        line.truncate(line.trim_end().len());
        line.push('\n');
        line
    };
    let mut out = render(&headers.iter().map(|h| h.to_string()).collect::<Vec<_>>());
    for row in rows {
        out.push_str(&render(row));
    }
    out
}
