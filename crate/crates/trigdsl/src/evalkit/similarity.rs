//! Text similarity metrics for generation-consistency scoring.
//!
//! Three views of "how alike are two generated trigger texts":
//! [`sequence_similarity`] (Ratcliff–Obershelp over recursive longest
//! common substrings), [`levenshtein_similarity`] (normalized edit
//! distance), and [`cosine_similarity`] (character-trigram frequency
//! vectors). All operate on Unicode scalar values, are symmetric, and map
//! into [0, 1] with identical inputs scoring 1.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::EvalkitError;

/// Ratcliff–Obershelp similarity: `2·M / (|a| + |b|)` where `M` counts the
/// characters covered by recursively matching the longest common substring
/// (earliest in the first string, then earliest in the second, on ties) and
/// repeating in the unmatched prefixes and suffixes. Because that tie-break
/// is positional, the decomposition runs on a canonical orientation of the
/// pair, making the metric symmetric. Both inputs empty → 1.
pub fn sequence_similarity(a: &str, b: &str) -> f64 {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let matched = match_len(&a, &b);
    2.0 * matched as f64 / (a.len() + b.len()) as f64
}

/// Total matched characters of the recursive longest-common-substring
/// decomposition.
fn match_len(a: &[char], b: &[char]) -> usize {
    // Index b once per recursion level: char → ascending positions.
    let mut b_positions: HashMap<char, Vec<usize>> = HashMap::new();
    for (j, &ch) in b.iter().enumerate() {
        b_positions.entry(ch).or_default().push(j);
    }

    // Longest match ending at (i, j), swept left to right so the earliest
    // maximal block wins ties.
    let (mut best_i, mut best_j, mut best_len) = (0usize, 0usize, 0usize);
    let mut len_ending_at: HashMap<usize, usize> = HashMap::new();
    for (i, &ch) in a.iter().enumerate() {
        let mut next: HashMap<usize, usize> = HashMap::new();
        if let Some(positions) = b_positions.get(&ch) {
            for &j in positions {
                let len = 1 + j
                    .checked_sub(1)
                    .and_then(|prev| len_ending_at.get(&prev))
                    .copied()
                    .unwrap_or(0);
                next.insert(j, len);
                if len > best_len {
                    (best_i, best_j, best_len) = (i + 1 - len, j + 1 - len, len);
                }
            }
        }
        len_ending_at = next;
    }

    if best_len == 0 {
        return 0;
    }
    best_len
        + match_len(&a[..best_i], &b[..best_j])
        + match_len(&a[best_i + best_len..], &b[best_j + best_len..])
}

/// Minimal number of single-character insertions, deletions, and
/// substitutions turning `a` into `b`.
pub fn levenshtein_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut previous: Vec<usize> = (0..=b.len()).collect();
    let mut current = vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        current[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let substitution = previous[j] + usize::from(ca != cb);
            current[j + 1] = substitution.min(previous[j + 1] + 1).min(current[j] + 1);
        }
        std::mem::swap(&mut previous, &mut current);
    }
    previous[b.len()]
}

/// `1 − dist(a, b) / max(|a|, |b|)`; both empty → 1.
pub fn levenshtein_similarity(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein_distance(a, b) as f64 / longest as f64
}

/// Cosine of the angle between character-trigram frequency vectors (raw
/// counts). A string shorter than three characters contributes itself as a
/// single gram. Identical inputs (including both empty) → exactly 1,
/// exactly one empty → 0.
pub fn cosine_similarity(a: &str, b: &str) -> f64 {
    if a == b {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let va = trigram_counts(a);
    let vb = trigram_counts(b);
    let dot: f64 = va
        .iter()
        .filter_map(|(gram, &ca)| vb.get(gram).map(|&cb| ca as f64 * cb as f64))
        .sum();
    let norm = |v: &HashMap<String, u64>| {
        v.values().map(|&c| (c as f64) * (c as f64)).sum::<f64>().sqrt()
    };
    // Equal trigram vectors from unequal strings can overshoot 1 by an ulp.
    (dot / (norm(&va) * norm(&vb))).min(1.0)
}

fn trigram_counts(s: &str) -> HashMap<String, u64> {
    let chars: Vec<char> = s.chars().collect();
    let mut counts = HashMap::new();
    if chars.len() < 3 {
        counts.insert(s.to_string(), 1);
        return counts;
    }
    for window in chars.windows(3) {
        *counts.entry(window.iter().collect::<String>()).or_insert(0) += 1;
    }
    counts
}

/// Mean, population standard deviation, and range of one metric across all
/// pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricAggregate {
    pub mean: f64,
    pub stddev: f64,
    pub min: f64,
    pub max: f64,
}

impl MetricAggregate {
    fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        MetricAggregate {
            mean,
            stddev: variance.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// All three similarity scores for one text pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScores {
    pub sequence: f64,
    pub levenshtein: f64,
    pub cosine: f64,
}

/// Consistency evaluation over a set of text pairs: per-pair scores plus
/// mean ± stddev aggregates per metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub pairs: Vec<PairScores>,
    pub sequence: MetricAggregate,
    pub levenshtein: MetricAggregate,
    pub cosine: MetricAggregate,
}

/// Scores every pair on all three metrics and aggregates.
pub fn consistency_eval(pairs: &[(String, String)]) -> Result<SimilarityReport, EvalkitError> {
    if pairs.is_empty() {
        return Err(EvalkitError::EmptyPairs);
    }
    let scores: Vec<PairScores> = pairs
        .iter()
        .map(|(a, b)| PairScores {
            sequence: sequence_similarity(a, b),
            levenshtein: levenshtein_similarity(a, b),
            cosine: cosine_similarity(a, b),
        })
        .collect();
    let column = |f: fn(&PairScores) -> f64| -> Vec<f64> { scores.iter().map(f).collect() };
    Ok(SimilarityReport {
        sequence: MetricAggregate::of(&column(|s| s.sequence)),
        levenshtein: MetricAggregate::of(&column(|s| s.levenshtein)),
        cosine: MetricAggregate::of(&column(|s| s.cosine)),
        pairs: scores,
    })
}

impl SimilarityReport {
    /// Aligned-column text rendering: one row per metric.
    pub fn to_text_table(&self) -> String {
        let row = |name: &str, a: &MetricAggregate| {
            vec![
                name.to_string(),
                format!("{:.4}", a.mean),
                format!("{:.4}", a.stddev),
                format!("{:.4}", a.min),
                format!("{:.4}", a.max),
            ]
        };
        super::text_table(
            &["metric", "mean", "stddev", "min", "max"],
            &[
                row("sequence", &self.sequence),
                row("levenshtein", &self.levenshtein),
                row("cosine", &self.cosine),
            ],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const EPS: f64 = 1e-12;

    /// Independent quadratic reference: scan every start pair for the
    /// longest common substring, then recurse around it.
    fn oracle_match_len(a: &[char], b: &[char]) -> usize {
        let (mut bi, mut bj, mut blen) = (0usize, 0usize, 0usize);
        for i in 0..a.len() {
            for j in 0..b.len() {
                let mut k = 0;
                while i + k < a.len() && j + k < b.len() && a[i + k] == b[j + k] {
                    k += 1;
                }
                if k > blen {
                    (bi, bj, blen) = (i, j, k);
                }
            }
        }
        if blen == 0 {
            return 0;
        }
        blen + oracle_match_len(&a[..bi], &b[..bj])
            + oracle_match_len(&a[bi + blen..], &b[bj + blen..])
    }

    fn oracle_sequence(a: &str, b: &str) -> f64 {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        if a.is_empty() && b.is_empty() {
            return 1.0;
        }
        2.0 * oracle_match_len(&a, &b) as f64 / (a.len() + b.len()) as f64
    }

    #[test]
    fn sequence_similarity_basics() {
        assert_eq!(sequence_similarity("abc", "abc"), 1.0);
        assert_eq!(sequence_similarity("abc", ""), 0.0);
        assert_eq!(sequence_similarity("", ""), 1.0);
        // "bcd" matches (3 chars), prefixes/suffixes add nothing: 2·3/8.
        assert!((sequence_similarity("abcd", "bcde") - 0.75).abs() < EPS);
    }

    #[test]
    fn sequence_similarity_matches_the_quadratic_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5e9);
        let alphabet = ['a', 'b', 'c'];
        for _ in 0..500 {
            let sample = |rng: &mut ChaCha8Rng| -> String {
                let len = rng.gen_range(0..12);
                (0..len).map(|_| alphabet[rng.gen_range(0..3)]).collect()
            };
            let a = sample(&mut rng);
            let b = sample(&mut rng);
            let got = sequence_similarity(&a, &b);
            let want = oracle_sequence(&a, &b);
            assert!(
                (got - want).abs() < EPS,
                "({a:?}, {b:?}): got {got}, oracle {want}"
            );
        }
    }

    #[test]
    fn levenshtein_classic_values() {
        assert_eq!(levenshtein_distance("kitten", "sitting"), 3);
        assert!((levenshtein_similarity("kitten", "sitting") - (1.0 - 3.0 / 7.0)).abs() < EPS);
        assert_eq!(levenshtein_similarity("same", "same"), 1.0);
        assert_eq!(levenshtein_similarity("a", "b"), 0.0);
        assert_eq!(levenshtein_similarity("", ""), 1.0);
        assert_eq!(levenshtein_distance("", "abc"), 3);
        assert_eq!(levenshtein_distance("flaw", "lawn"), 2);
    }

    #[test]
    fn levenshtein_distance_satisfies_the_triangle_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let alphabet = ['x', 'y', 'z', 'w'];
        for _ in 0..300 {
            let sample = |rng: &mut ChaCha8Rng| -> String {
                let len = rng.gen_range(0..10);
                (0..len).map(|_| alphabet[rng.gen_range(0..4)]).collect()
            };
            let (a, b, c) = (sample(&mut rng), sample(&mut rng), sample(&mut rng));
            let (ab, bc, ac) = (
                levenshtein_distance(&a, &b),
                levenshtein_distance(&b, &c),
                levenshtein_distance(&a, &c),
            );
            assert!(ac <= ab + bc, "triangle violated on {a:?} {b:?} {c:?}");
        }
    }

    #[test]
    fn cosine_similarity_basics() {
        assert_eq!(cosine_similarity("", ""), 1.0);
        assert_eq!(cosine_similarity("abc", ""), 0.0);
        assert!((cosine_similarity("abcdef", "abcdef") - 1.0).abs() < EPS);
        // No shared trigrams at all.
        assert_eq!(cosine_similarity("aaa", "bbb"), 0.0);
        // Counts: {abc:2, bca:1, cab:1} · {abc:1} = 2; norms √6 and 1.
        assert!((cosine_similarity("abcabc", "abc") - 2.0 / 6.0f64.sqrt()).abs() < EPS);
        // Short strings compare as whole-string grams.
        assert_eq!(cosine_similarity("ab", "ab"), 1.0);
        assert_eq!(cosine_similarity("ab", "cd"), 0.0);
    }

    #[test]
    fn all_metrics_are_symmetric_and_reflexive() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let alphabet: Vec<char> = "abcXYZ(){}=<>! ".chars().collect();
        for _ in 0..200 {
            let sample = |rng: &mut ChaCha8Rng| -> String {
                let len = rng.gen_range(0..20);
                (0..len)
                    .map(|_| alphabet[rng.gen_range(0..alphabet.len())])
                    .collect()
            };
            let a = sample(&mut rng);
            let b = sample(&mut rng);
            for metric in [sequence_similarity, levenshtein_similarity, cosine_similarity] {
                let ab = metric(&a, &b);
                let ba = metric(&b, &a);
                assert!((ab - ba).abs() < EPS, "asymmetric on ({a:?}, {b:?})");
                assert!((0.0..=1.0 + EPS).contains(&ab), "out of range on ({a:?}, {b:?})");
                assert!((metric(&a, &a) - 1.0).abs() < EPS, "not reflexive on {a:?}");
            }
        }
    }

    #[test]
    fn consistency_eval_aggregates() {
        // Identical pairs: all means 1, stddev 0.
        let pairs = vec![
            ("TRIGGER a { }".to_string(), "TRIGGER a { }".to_string()),
            ("same text".to_string(), "same text".to_string()),
        ];
        let report = consistency_eval(&pairs).unwrap();
        for aggregate in [&report.sequence, &report.levenshtein, &report.cosine] {
            assert_eq!(aggregate.mean, 1.0);
            assert_eq!(aggregate.stddev, 0.0);
        }

        // Single pair: stddev 0, mean within [min, max].
        let report = consistency_eval(&[("kitten".to_string(), "sitting".to_string())]).unwrap();
        assert_eq!(report.levenshtein.stddev, 0.0);
        assert!((report.levenshtein.mean - (1.0 - 3.0 / 7.0)).abs() < EPS);
        assert!(report.sequence.min <= report.sequence.mean);
        assert!(report.sequence.mean <= report.sequence.max);

        assert!(matches!(consistency_eval(&[]), Err(EvalkitError::EmptyPairs)));
    }

    #[test]
    fn report_renders_an_aligned_table() {
        let report =
            consistency_eval(&[("abcd".to_string(), "bcde".to_string())]).unwrap();
        let table = report.to_text_table();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 4); // header + three metrics
        assert!(lines[0].starts_with("metric"));
        assert!(lines[1].contains("0.7500"));
    }
}
