//! Scalar evaluation metrics: token-level cross-entropy, BLEU-4, ROUGE-L,
//! Inception Score, and mean +/- sample-std aggregation over seeds.
//!
//! Conventions fixed here: natural logarithm throughout; BLEU is cumulative
//! BLEU-4 with clipped precisions, uniform weights, geometric mean, brevity
//! penalty `exp(1 - r/c)` for `c < r`, no smoothing (any zero precision
//! zeroes the score), and candidates shorter than four tokens use n-grams up
//! to the candidate length; ROUGE is ROUGE-L F1 from the longest common
//! subsequence.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {left} reference tokens vs {right} distributions")]
    LengthMismatch { left: usize, right: usize },
    #[error("reference token {0:?} is not in the prediction vocabulary")]
    UnknownToken(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("degenerate probability row {row}: {message}")]
    DegenerateRow { row: usize, message: String },
    #[error("empty input")]
    EmptyInput,
    #[error("{0} rows cannot form {1} splits")]
    BadSplitCount(usize, usize),
}

/// Whitespace tokenization used for serialized tuple text.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

/// Per-position probability distributions over a shared vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSequence {
    vocab: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl DistributionSequence {
    pub fn new(vocab: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, MetricsError> {
        for (i, row) in rows.iter().enumerate() {
            if row.len() != vocab.len() {
                return Err(MetricsError::InvalidDistribution(format!(
                    "row {i} has {} entries for a vocabulary of {}",
                    row.len(),
                    vocab.len()
                )));
            }
            check_distribution(row, i)?;
        }
        Ok(DistributionSequence { vocab, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn token_index(&self, token: &str) -> Option<usize> {
        self.vocab.iter().position(|t| t == token)
    }
}

fn check_distribution(row: &[f64], index: usize) -> Result<(), MetricsError> {
    if row.iter().any(|&p| p < 0.0 || !p.is_finite()) {
        return Err(MetricsError::DegenerateRow {
            row: index,
            message: "entries must be finite and non-negative".into(),
        });
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(MetricsError::DegenerateRow {
            row: index,
            message: format!("entries sum to {sum}, expected 1"),
        });
    }
    Ok(())
}

/// Cross-entropy of a reference token sequence under predicted
/// distributions, in nats. Positions where the reference token has zero
/// probability drive the value to infinity; they are reported alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossEntropy {
    pub nats: f64,
    pub zero_probability_positions: Vec<usize>,
}

/// Sum over positions of `-ln p(reference token)`.
pub fn token_cross_entropy(
    reference: &[String],
    predictions: &DistributionSequence,
) -> Result<CrossEntropy, MetricsError> {
    if reference.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if reference.len() != predictions.len() {
        return Err(MetricsError::LengthMismatch {
            left: reference.len(),
            right: predictions.len(),
        });
    }
    let mut nats = 0.0f64;
    let mut zero_positions = Vec::new();
    for (i, token) in reference.iter().enumerate() {
        let index = predictions
            .token_index(token)
            .ok_or_else(|| MetricsError::UnknownToken(token.clone()))?;
        let p = predictions.rows[i][index];
        if p == 0.0 {
            zero_positions.push(i);
        } else {
            nats -= p.ln();
        }
    }
    if !zero_positions.is_empty() {
        nats = f64::INFINITY;
    }
    Ok(CrossEntropy { nats, zero_probability_positions: zero_positions })
}

fn ngram_counts(tokens: &[String], n: usize) -> std::collections::HashMap<&[String], usize> {
    let mut counts = std::collections::HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for window in tokens.windows(n) {
        *counts.entry(window).or_insert(0) += 1;
    }
    counts
}

fn clipped_matches(candidate: &[String], reference: &[String], n: usize) -> (usize, usize) {
    let cand = ngram_counts(candidate, n);
    let reference = ngram_counts(reference, n);
    let total: usize = cand.values().sum();
    let clipped: usize = cand
        .iter()
        .map(|(gram, count)| (*count).min(reference.get(gram).copied().unwrap_or(0)))
        .sum();
    (clipped, total)
}

/// Cumulative BLEU-4 against a single reference, in [0, 1].
pub fn bleu(candidate: &[String], reference: &[String]) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let max_n = candidate.len().min(4);
    let mut log_sum = 0.0f64;
    for n in 1..=max_n {
        let (clipped, total) = clipped_matches(candidate, reference, n);
        if clipped == 0 {
            return 0.0;
        }
        log_sum += (clipped as f64 / total as f64).ln();
    }
    let precision_mean = (log_sum / max_n as f64).exp();
    let c = candidate.len() as f64;
    let r = reference.len() as f64;
    let brevity = if c < r { (1.0 - r / c).exp() } else { 1.0 };
    brevity * precision_mean
}

/// Corpus-level BLEU-4: n-gram counts and lengths pooled over all pairs
/// before combining, as in the standard corpus formulation.
pub fn bleu_corpus(pairs: &[(Vec<String>, Vec<String>)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let mut log_precisions = Vec::with_capacity(4);
    for n in 1..=4usize {
        let mut clipped_total = 0usize;
        let mut total = 0usize;
        for (candidate, reference) in pairs {
            let (clipped, count) = clipped_matches(candidate, reference, n);
            clipped_total += clipped;
            total += count;
        }
        if total == 0 {
            // No candidate reaches this order; shorter orders decide alone.
            break;
        }
        if clipped_total == 0 {
            return 0.0;
        }
        log_precisions.push((clipped_total as f64 / total as f64).ln());
    }
    if log_precisions.is_empty() {
        return 0.0;
    }
    let log_mean = log_precisions.iter().sum::<f64>() / log_precisions.len() as f64;
    let c: usize = pairs.iter().map(|(candidate, _)| candidate.len()).sum();
    let r: usize = pairs.iter().map(|(_, reference)| reference.len()).sum();
    if c == 0 {
        return 0.0;
    }
    let brevity = if c < r { (1.0 - r as f64 / c as f64).exp() } else { 1.0 };
    brevity * log_mean.exp()
}

/// ROUGE-L precision, recall, and F1 from the longest common subsequence.
pub fn rouge_l(candidate: &[String], reference: &[String]) -> (f64, f64, f64) {
    let lcs = lcs_length(candidate, reference);
    if lcs == 0 {
        return (0.0, 0.0, 0.0);
    }
    let precision = lcs as f64 / candidate.len() as f64;
    let recall = lcs as f64 / reference.len() as f64;
    let f1 = 2.0 * precision * recall / (precision + recall);
    (precision, recall, f1)
}

fn lcs_length(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut row = vec![0usize; b.len() + 1];
    for item in a {
        let mut diagonal = 0usize;
        for (j, other) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if item == other { diagonal + 1 } else { up.max(row[j]) };
            diagonal = up;
        }
    }
    row[b.len()]
}

/// Per-image class probability rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix {
    rows: Vec<Vec<f64>>,
    classes: usize,
}

impl ProbMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, MetricsError> {
        if rows.is_empty() {
            return Err(MetricsError::EmptyInput);
        }
        let classes = rows[0].len();
        if classes == 0 {
            return Err(MetricsError::InvalidDistribution("rows have no classes".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != classes {
                return Err(MetricsError::InvalidDistribution(format!(
                    "row {i} has {} classes, expected {classes}",
                    row.len()
                )));
            }
            check_distribution(row, i)?;
        }
        Ok(ProbMatrix { rows, classes })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn classes(&self) -> usize {
        self.classes
    }
}

/// A scalar reported as mean +/- sample standard deviation over runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricValue {
    pub mean: f64,
    pub std: f64,
    pub per_seed: Vec<f64>,
}

impl MetricValue {
    /// True when only one value was aggregated, in which case `std` is 0 by
    /// convention rather than by estimation.
    pub fn single_sample(&self) -> bool {
        self.per_seed.len() < 2
    }

    /// Renders e.g. `0.473 ± 0.004`.
    pub fn format(&self, decimals: usize) -> String {
        format!("{:.*} ± {:.*}", decimals, self.mean, decimals, self.std)
    }
}

/// Arithmetic mean and sample (n-1) standard deviation.
pub fn aggregate_seeds(values: &[f64]) -> Result<MetricValue, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (n - 1.0)).sqrt()
    };
    Ok(MetricValue { mean, std, per_seed: values.to_vec() })
}

/// Inception Score: per split, `exp(mean_rows KL(p(y|x) || marginal))` with
/// natural logs and `0 * ln 0 = 0`. The per-split scores are aggregated as
/// a [`MetricValue`].
pub fn inception_score(matrix: &ProbMatrix, splits: usize) -> Result<MetricValue, MetricsError> {
    let n = matrix.rows.len();
    if splits == 0 || splits > n {
        return Err(MetricsError::BadSplitCount(n, splits));
    }
    let mut scores = Vec::with_capacity(splits);
    for s in 0..splits {
        let start = s * n / splits;
        let end = (s + 1) * n / splits;
        let chunk = &matrix.rows[start..end];

        let mut marginal = vec![0.0f64; matrix.classes];
        for row in chunk {
            for (m, &p) in marginal.iter_mut().zip(row) {
                *m += p;
            }
        }
        for m in &mut marginal {
            *m /= chunk.len() as f64;
        }

        let mut kl_sum = 0.0f64;
        for row in chunk {
            let mut kl = 0.0f64;
            for (&p, &m) in row.iter().zip(&marginal) {
                if p > 0.0 {
                    kl += p * (p.ln() - m.ln());
                }
            }
            kl_sum += kl;
        }
        scores.push((kl_sum / chunk.len() as f64).exp());
    }
    aggregate_seeds(&scores)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(text: &str) -> Vec<String> {
        tokenize(text)
    }

    #[test]
    fn cross_entropy_of_perfect_prediction_is_zero() {
        let vocab: Vec<String> = toks("a b c d");
        let rows = vec![
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ];
        let pred = DistributionSequence::new(vocab, rows).unwrap();
        let ce = token_cross_entropy(&toks("a c"), &pred).unwrap();
        assert_eq!(ce.nats, 0.0);
        assert!(ce.zero_probability_positions.is_empty());
    }

    #[test]
    fn cross_entropy_of_uniform_over_four_is_two_ln_four() {
        let vocab = toks("a b c d");
        let rows = vec![vec![0.25; 4], vec![0.25; 4]];
        let pred = DistributionSequence::new(vocab, rows).unwrap();
        let ce = token_cross_entropy(&toks("a d"), &pred).unwrap();
        assert!((ce.nats - 2.0 * 4.0f64.ln()).abs() < 1e-9, "{}", ce.nats);
    }

    #[test]
    fn cross_entropy_zero_probability_is_flagged_infinity() {
        let vocab = toks("a b");
        let rows = vec![vec![0.0, 1.0]];
        let pred = DistributionSequence::new(vocab, rows).unwrap();
        let ce = token_cross_entropy(&toks("a"), &pred).unwrap();
        assert!(ce.nats.is_infinite());
        assert_eq!(ce.zero_probability_positions, vec![0]);
    }

    #[test]
    fn cross_entropy_checks_lengths_and_vocabulary() {
        let vocab = toks("a b");
        let pred = DistributionSequence::new(vocab, vec![vec![0.5, 0.5]]).unwrap();
        assert_eq!(
            token_cross_entropy(&toks("a b"), &pred),
            Err(MetricsError::LengthMismatch { left: 2, right: 1 })
        );
        assert_eq!(
            token_cross_entropy(&toks("z"), &pred),
            Err(MetricsError::UnknownToken("z".into()))
        );
    }

    #[test]
    fn cross_entropy_decreases_as_mass_moves_to_reference() {
        let vocab = toks("a b");
        let mut previous = f64::INFINITY;
        for step in 1..=10 {
            let p = step as f64 / 10.0;
            let pred =
                DistributionSequence::new(vocab.clone(), vec![vec![p, 1.0 - p]]).unwrap();
            let ce = token_cross_entropy(&toks("a"), &pred).unwrap();
            assert!(ce.nats < previous);
            previous = ce.nats;
        }
    }

    #[test]
    fn bleu_identical_sequences_score_one() {
        let s = toks("objects one two three four five");
        assert!((bleu(&s, &s) - 1.0).abs() < 1e-12);
        let short = toks("a b");
        assert!((bleu(&short, &short) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bleu_disjoint_vocabulary_scores_zero() {
        assert_eq!(bleu(&toks("a b c d"), &toks("w x y z")), 0.0);
    }

    #[test]
    fn bleu_matches_hand_computation_for_short_candidate() {
        // candidate "the cat sat", reference "the cat sat down":
        // p1 = p2 = p3 = 1, brevity = exp(1 - 4/3).
        let value = bleu(&toks("the cat sat"), &toks("the cat sat down"));
        let expected = (1.0f64 - 4.0 / 3.0).exp();
        assert!((value - expected).abs() < 1e-12, "{value} vs {expected}");
    }

    #[test]
    fn bleu_clipping_limits_repeats() {
        // "the the the" vs "the cat": p1 clipped to 1/3; max_n = 2 and the
        // bigram "the the" never occurs in the reference, so score is 0.
        assert_eq!(bleu(&toks("the the the"), &toks("the cat")), 0.0);
    }

    #[test]
    fn corpus_bleu_is_one_for_identical_corpora() {
        let pairs: Vec<(Vec<String>, Vec<String>)> = (0..5)
            .map(|i| {
                let s = toks(&format!("line {i} with several shared tokens here"));
                (s.clone(), s)
            })
            .collect();
        assert!((bleu_corpus(&pairs) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rouge_identical_is_all_ones() {
        let s = toks("a b c");
        assert_eq!(rouge_l(&s, &s), (1.0, 1.0, 1.0));
    }

    #[test]
    fn rouge_matches_hand_lcs() {
        let (p, r, f1) = rouge_l(&toks("a c d"), &toks("a b c d"));
        assert_eq!(p, 1.0);
        assert_eq!(r, 0.75);
        assert!((f1 - 6.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn rouge_disjoint_is_zero() {
        assert_eq!(rouge_l(&toks("a b"), &toks("x y")), (0.0, 0.0, 0.0));
    }

    #[test]
    fn inception_score_uniform_rows_is_one() {
        let rows = vec![vec![0.2; 5]; 8];
        let score = inception_score(&ProbMatrix::new(rows).unwrap(), 1).unwrap();
        assert!((score.mean - 1.0).abs() < 1e-9);
    }

    #[test]
    fn inception_score_one_hot_balanced_is_class_count() {
        let k = 10;
        let rows: Vec<Vec<f64>> = (0..k)
            .map(|i| {
                let mut row = vec![0.0; k];
                row[i] = 1.0;
                row
            })
            .collect();
        let score = inception_score(&ProbMatrix::new(rows).unwrap(), 1).unwrap();
        assert!((score.mean - 10.0).abs() < 1e-6, "{}", score.mean);
    }

    #[test]
    fn inception_score_is_at_least_one_and_below_k_when_unbalanced() {
        // One-hot but unbalanced: 3 rows of class 0, 1 row of class 1.
        let mut rows = vec![vec![1.0, 0.0]; 3];
        rows.push(vec![0.0, 1.0]);
        let score = inception_score(&ProbMatrix::new(rows).unwrap(), 1).unwrap();
        assert!(score.mean >= 1.0);
        assert!(score.mean < 2.0);

        // Not one-hot: also strictly below k.
        let soft = vec![vec![0.9, 0.1], vec![0.1, 0.9]];
        let score = inception_score(&ProbMatrix::new(soft).unwrap(), 1).unwrap();
        assert!(score.mean >= 1.0 && score.mean < 2.0);
    }

    #[test]
    fn inception_score_is_stable_under_row_shuffles_within_a_split() {
        let rows = vec![
            vec![0.7, 0.2, 0.1],
            vec![0.1, 0.8, 0.1],
            vec![0.3, 0.3, 0.4],
            vec![0.25, 0.5, 0.25],
        ];
        let a = inception_score(&ProbMatrix::new(rows.clone()).unwrap(), 1).unwrap();
        let mut shuffled = rows;
        shuffled.reverse();
        let b = inception_score(&ProbMatrix::new(shuffled).unwrap(), 1).unwrap();
        assert!((a.mean - b.mean).abs() < 1e-12);
    }

    #[test]
    fn inception_score_validates_splits_and_rows() {
        let rows = vec![vec![0.5, 0.5]; 3];
        let m = ProbMatrix::new(rows).unwrap();
        assert!(matches!(inception_score(&m, 0), Err(MetricsError::BadSplitCount(3, 0))));
        assert!(matches!(inception_score(&m, 4), Err(MetricsError::BadSplitCount(3, 4))));
        assert!(ProbMatrix::new(vec![vec![0.5, 0.6]]).is_err());
        assert!(ProbMatrix::new(vec![vec![-0.5, 1.5]]).is_err());
    }

    #[test]
    fn aggregate_seeds_matches_analytic_case() {
        let v = aggregate_seeds(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(v.mean, 2.0);
        assert_eq!(v.std, 1.0);
        assert!(!v.single_sample());
    }

    #[test]
    fn aggregate_seeds_constant_values_have_zero_std() {
        let v = aggregate_seeds(&[0.446, 0.446, 0.446]).unwrap();
        assert_eq!(v.mean, 0.446);
        assert_eq!(v.std, 0.0);
    }

    #[test]
    fn aggregate_seeds_single_value_is_flagged() {
        let v = aggregate_seeds(&[0.5]).unwrap();
        assert_eq!(v.std, 0.0);
        assert!(v.single_sample());
        assert!(matches!(aggregate_seeds(&[]), Err(MetricsError::EmptyInput)));
    }

    #[test]
    fn metric_value_formats_in_mean_std_style() {
        let v = MetricValue { mean: 0.473, std: 0.004, per_seed: vec![0.469, 0.473, 0.477] };
        assert_eq!(v.format(3), "0.473 ± 0.004");
        let is = MetricValue { mean: 6.94, std: 0.58, per_seed: vec![] };
        assert_eq!(is.format(2), "6.94 ± 0.58");
    }
}
