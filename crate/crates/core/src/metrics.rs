//! Reference-based translation metrics: corpus BLEU, ROUGE-L, exact-match
//! rate, and t-distribution confidence intervals for per-sentence means.
//!
//! All functions are pure; corpus pooling uses integer counts so scores
//! are bit-identical under any pair ordering.

use std::collections::BTreeMap;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::corpus::normalize_text;
use crate::error::MetricsError;

/// Identifier recorded in metric metadata so scores can be reproduced
/// bit-for-bit: lowercasing off, punctuation detached as standalone
/// tokens, whitespace split.
pub const METRIC_TOKENIZER: &str = "punct-detach-v1";

/// One hypothesis with its reference translations. Texts are normalized
/// at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPair {
    pub hypothesis: String,
    pub references: Vec<String>,
}

impl EvalPair {
    pub fn new(
        hypothesis: &str,
        references: impl IntoIterator<Item = impl AsRef<str>>,
    ) -> Result<EvalPair, MetricsError> {
        let references: Vec<String> = references
            .into_iter()
            .map(|r| normalize_text(r.as_ref()))
            .collect();
        if references.is_empty() {
            return Err(MetricsError::NoReferences);
        }
        Ok(EvalPair {
            hypothesis: normalize_text(hypothesis),
            references,
        })
    }
}

/// A named metric value with an optional confidence interval and the
/// knobs that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_low: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_high: Option<f64>,
    pub n: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

impl MetricResult {
    fn new(name: &str, value: f64, n: u64) -> MetricResult {
        MetricResult {
            name: name.to_string(),
            value,
            ci_low: None,
            ci_high: None,
            n,
            metadata: BTreeMap::new(),
        }
    }
}

/// Metric-internal word splitter: punctuation becomes standalone tokens,
/// everything else splits on whitespace. Case is preserved.
pub fn metric_tokens(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_whitespace() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
        } else if ch.is_alphanumeric() {
            current.push(ch);
        } else {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            tokens.push(ch.to_string());
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Zero-precision fallback for corpus BLEU.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothing {
    /// A zero pooled precision zeroes the score.
    None,
    /// When any pooled precision is zero, orders >= 2 get one added to
    /// both match and total counts; order 1 is never smoothed.
    AddOne,
}

impl Smoothing {
    fn label(&self) -> &'static str {
        match self {
            Smoothing::None => "none",
            Smoothing::AddOne => "add-one-n2plus",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BleuOptions {
    pub max_n: usize,
    pub smoothing: Smoothing,
}

impl Default for BleuOptions {
    fn default() -> Self {
        BleuOptions {
            max_n: 4,
            smoothing: Smoothing::AddOne,
        }
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut counts: HashMap<&[String], u64> = HashMap::new();
    if tokens.len() >= n {
        for start in 0..=tokens.len() - n {
            *counts.entry(&tokens[start..start + n]).or_insert(0) += 1;
        }
    }
    counts
}

/// Corpus BLEU on a 0..100 scale: brevity penalty times the geometric
/// mean of clipped n-gram precisions pooled over all pairs, with uniform
/// weights 1/max_n. The reference length is the closest to each
/// hypothesis (ties to the shorter).
pub fn bleu_corpus(pairs: &[EvalPair], options: BleuOptions) -> Result<MetricResult, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::Empty);
    }
    let max_n = options.max_n;
    let mut matches = vec![0u64; max_n];
    let mut totals = vec![0u64; max_n];
    let mut hyp_len = 0u64;
    let mut ref_len = 0u64;

    for pair in pairs {
        if pair.references.is_empty() {
            return Err(MetricsError::NoReferences);
        }
        let hyp = metric_tokens(&pair.hypothesis);
        let refs: Vec<Vec<String>> = pair.references.iter().map(|r| metric_tokens(r)).collect();

        hyp_len += hyp.len() as u64;
        let mut closest = refs[0].len();
        for r in refs.iter().skip(1) {
            let delta = |len: usize| (len as i64 - hyp.len() as i64).abs();
            if delta(r.len()) < delta(closest) || (delta(r.len()) == delta(closest) && r.len() < closest)
            {
                closest = r.len();
            }
        }
        ref_len += closest as u64;

        for n in 1..=max_n {
            let hyp_counts = ngram_counts(&hyp, n);
            totals[n - 1] += hyp_counts.values().sum::<u64>();
            let ref_counts: Vec<HashMap<&[String], u64>> =
                refs.iter().map(|r| ngram_counts(r, n)).collect();
            for (gram, &count) in &hyp_counts {
                let best = ref_counts
                    .iter()
                    .map(|rc| rc.get(gram).copied().unwrap_or(0))
                    .max()
                    .unwrap_or(0);
                matches[n - 1] += count.min(best);
            }
        }
    }

    let mut result = MetricResult::new("bleu", 0.0, pairs.len() as u64);
    result
        .metadata
        .insert("tokenizer".to_string(), METRIC_TOKENIZER.to_string());
    result
        .metadata
        .insert("max_n".to_string(), max_n.to_string());

    let needs_smoothing = matches.iter().any(|&m| m == 0);
    let smoothed = needs_smoothing && options.smoothing == Smoothing::AddOne;
    result.metadata.insert(
        "smoothing".to_string(),
        format!(
            "{} ({})",
            options.smoothing.label(),
            if smoothed { "applied" } else { "not applied" }
        ),
    );

    if hyp_len == 0 {
        return Ok(result); // no hypothesis tokens at all
    }

    let mut log_sum = 0.0f64;
    for n in 1..=max_n {
        let (m, t) = if smoothed && n >= 2 {
            (matches[n - 1] + 1, totals[n - 1] + 1)
        } else {
            (matches[n - 1], totals[n - 1])
        };
        if m == 0 {
            return Ok(result); // value stays 0.0
        }
        log_sum += (m as f64 / t as f64).ln() / max_n as f64;
    }

    let c = hyp_len as f64;
    let r = ref_len as f64;
    let brevity_penalty = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    result.value = brevity_penalty * log_sum.exp() * 100.0;
    Ok(result)
}

/// Per-pair ROUGE-L scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

fn lcs_table_len(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut current = vec![0usize; b.len() + 1];
    for item_a in a {
        for (j, item_b) in b.iter().enumerate() {
            current[j + 1] = if item_a == item_b {
                prev[j] + 1
            } else {
                prev[j + 1].max(current[j])
            };
        }
        std::mem::swap(&mut prev, &mut current);
    }
    prev[b.len()]
}

/// ROUGE-L against the first reference: recall LCS/|ref|, precision
/// LCS/|hyp|, and the beta-weighted F-measure. All three are 0 when the
/// LCS is empty.
pub fn rouge_l(pair: &EvalPair, beta: f64) -> RougeScore {
    let hyp = metric_tokens(&pair.hypothesis);
    let reference = metric_tokens(&pair.references[0]);
    let lcs = lcs_table_len(&hyp, &reference);
    if lcs == 0 {
        return RougeScore {
            precision: 0.0,
            recall: 0.0,
            f: 0.0,
        };
    }
    let precision = lcs as f64 / hyp.len() as f64;
    let recall = lcs as f64 / reference.len() as f64;
    let b2 = beta * beta;
    RougeScore {
        precision,
        recall,
        f: (1.0 + b2) * recall * precision / (recall + b2 * precision),
    }
}

/// Mean ROUGE-L F over a pair list, with per-pair precision/recall means
/// recorded in metadata and a t-CI when there are at least two pairs.
pub fn rouge_l_corpus(pairs: &[EvalPair], beta: f64) -> Result<MetricResult, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::Empty);
    }
    let scores: Vec<RougeScore> = pairs.iter().map(|p| rouge_l(p, beta)).collect();
    let n = scores.len() as f64;
    let mean_f = scores.iter().map(|s| s.f).sum::<f64>() / n;
    let mut result = MetricResult::new("rouge-l", mean_f, pairs.len() as u64);
    result
        .metadata
        .insert("tokenizer".to_string(), METRIC_TOKENIZER.to_string());
    result.metadata.insert("beta".to_string(), beta.to_string());
    result.metadata.insert(
        "mean_precision".to_string(),
        (scores.iter().map(|s| s.precision).sum::<f64>() / n).to_string(),
    );
    result.metadata.insert(
        "mean_recall".to_string(),
        (scores.iter().map(|s| s.recall).sum::<f64>() / n).to_string(),
    );
    if scores.len() >= 2 {
        let f_scores: Vec<f64> = scores.iter().map(|s| s.f).collect();
        let ci = mean_with_t_ci(&f_scores, 0.95)?;
        result.ci_low = ci.ci_low;
        result.ci_high = ci.ci_high;
    }
    Ok(result)
}

/// Fraction of pairs whose normalized hypothesis equals one of its
/// references exactly. An empty list scores 0.
pub fn exact_match_rate(pairs: &[EvalPair]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let hits = pairs
        .iter()
        .filter(|p| p.references.iter().any(|r| *r == p.hypothesis))
        .count();
    hits as f64 / pairs.len() as f64
}

/// Sample mean with a two-sided Student-t confidence interval:
/// mean +/- t_{(1+confidence)/2, n-1} * s / sqrt(n).
pub fn mean_with_t_ci(scores: &[f64], confidence: f64) -> Result<MetricResult, MetricsError> {
    if scores.len() < 2 {
        return Err(MetricsError::TooFewScores(scores.len()));
    }
    if !(0.0..1.0).contains(&confidence) {
        return Err(MetricsError::BadConfidence(confidence));
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let variance = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let std_dev = variance.sqrt();
    let dist = StudentsT::new(0.0, 1.0, n - 1.0)
        .expect("degrees of freedom are positive for n >= 2");
    let t = dist.inverse_cdf((1.0 + confidence) / 2.0);
    let half_width = t * std_dev / n.sqrt();

    let mut result = MetricResult::new("mean", mean, scores.len() as u64);
    result.ci_low = Some(mean - half_width);
    result.ci_high = Some(mean + half_width);
    result
        .metadata
        .insert("confidence".to_string(), confidence.to_string());
    result
        .metadata
        .insert("distribution".to_string(), "student-t".to_string());
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(hyp: &str, refs: &[&str]) -> EvalPair {
        EvalPair::new(hyp, refs.iter().copied()).unwrap()
    }

    #[test]
    fn tokenizer_detaches_punctuation() {
        assert_eq!(
            metric_tokens("olá, mundo!"),
            vec!["olá", ",", "mundo", "!"]
        );
        assert_eq!(metric_tokens(""), Vec::<String>::new());
    }

    #[test]
    fn identical_hypotheses_score_100() {
        let pairs = vec![
            pair("the cat sat on the mat", &["the cat sat on the mat"]),
            pair("um texto qualquer aqui", &["um texto qualquer aqui"]),
        ];
        let result = bleu_corpus(&pairs, BleuOptions::default()).unwrap();
        assert_eq!(result.value, 100.0);
    }

    #[test]
    fn short_identical_hypothesis_scores_100_under_add_one() {
        let pairs = vec![pair("olá", &["olá"])];
        let result = bleu_corpus(&pairs, BleuOptions::default()).unwrap();
        assert_eq!(result.value, 100.0);
        assert!(result.metadata["smoothing"].contains("applied"));
    }

    #[test]
    fn clipping_counts_the_reference_occurrences() {
        // p1 = 1/4: "the" appears once in the reference.
        let pairs = vec![pair("the the the the", &["the cat"])];
        let result = bleu_corpus(
            &pairs,
            BleuOptions {
                max_n: 1,
                smoothing: Smoothing::None,
            },
        )
        .unwrap();
        // BP: c=4 > r=2 -> 1; value = 100 * 1/4.
        assert!((result.value - 25.0).abs() < 1e-9);
    }

    #[test]
    fn disjoint_vocabulary_is_zero_unsmoothed() {
        let pairs = vec![pair("aaa bbb ccc ddd", &["eee fff ggg hhh"])];
        let result = bleu_corpus(
            &pairs,
            BleuOptions {
                max_n: 4,
                smoothing: Smoothing::None,
            },
        )
        .unwrap();
        assert_eq!(result.value, 0.0);
    }

    #[test]
    fn empty_pair_list_is_an_error() {
        assert!(matches!(
            bleu_corpus(&[], BleuOptions::default()),
            Err(MetricsError::Empty)
        ));
    }

    #[test]
    fn rouge_identical_is_all_ones() {
        let score = rouge_l(&pair("a b c", &["a b c"]), 1.2);
        assert_eq!((score.precision, score.recall, score.f), (1.0, 1.0, 1.0));
    }

    #[test]
    fn rouge_on_toy_strings_matches_hand_lcs() {
        // LCS("a b c d", "a c d") = 3 -> P = 3/4, R = 1.
        let score = rouge_l(&pair("a b c d", &["a c d"]), 1.2);
        assert!((score.precision - 0.75).abs() < 1e-12);
        assert!((score.recall - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rouge_disjoint_is_zero() {
        let score = rouge_l(&pair("a b", &["c d"]), 1.2);
        assert_eq!((score.precision, score.recall, score.f), (0.0, 0.0, 0.0));
    }

    #[test]
    fn rouge_empty_hypothesis_is_zero() {
        let score = rouge_l(&pair("", &["c d"]), 1.2);
        assert_eq!((score.precision, score.recall, score.f), (0.0, 0.0, 0.0));
    }

    #[test]
    fn exact_match_counts_normalized_equality() {
        let pairs = vec![
            pair("ola", &["ola"]),
            pair("e\u{301}", &["é"]), // NFC equalizes
            pair("x", &["y"]),
        ];
        let rate = exact_match_rate(&pairs);
        assert!((rate - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(exact_match_rate(&[]), 0.0);
    }

    #[test]
    fn t_ci_of_one_to_five_matches_the_table_value() {
        let result = mean_with_t_ci(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.95).unwrap();
        assert!((result.value - 3.0).abs() < 1e-12);
        let half = result.ci_high.unwrap() - result.value;
        assert!((half - 2.7764 * 1.5811 / 5f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn t_ci_degenerate_cases() {
        let flat = mean_with_t_ci(&[7.0, 7.0, 7.0], 0.95).unwrap();
        assert_eq!(flat.ci_low, Some(7.0));
        assert_eq!(flat.ci_high, Some(7.0));

        let zero_conf = mean_with_t_ci(&[1.0, 2.0, 3.0], 0.0).unwrap();
        assert_eq!(zero_conf.ci_low, Some(zero_conf.value));
        assert_eq!(zero_conf.ci_high, Some(zero_conf.value));

        assert!(matches!(
            mean_with_t_ci(&[1.0], 0.95),
            Err(MetricsError::TooFewScores(1))
        ));
        assert!(matches!(
            mean_with_t_ci(&[1.0, 2.0], 1.0),
            Err(MetricsError::BadConfidence(_))
        ));
    }
}
