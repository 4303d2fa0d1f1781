//! Deliberately naive reference implementations of the evaluation metrics.
//!
//! Everything here favors obviousness over speed: n-grams are counted by
//! rescanning token windows, the LCS is a memoized recursion, and token
//! counts go through a regex. Test suites compare the optimized crate
//! against these to catch bookkeeping mistakes. Keep this crate free of
//! dependencies on the main library so the two paths stay independent.

use std::collections::HashMap;

/// Splits text the way the metrics define a "word": punctuation detached
/// as standalone tokens, everything else split on whitespace.
pub fn metric_tokens(text: &str) -> Vec<String> {
    let mut spaced = String::with_capacity(text.len() * 2);
    for ch in text.chars() {
        if ch.is_alphanumeric() || ch.is_whitespace() {
            spaced.push(ch);
        } else {
            spaced.push(' ');
            spaced.push(ch);
            spaced.push(' ');
        }
    }
    spaced.split_whitespace().map(str::to_owned).collect()
}

fn ngram_at(tokens: &[String], start: usize, n: usize) -> &[String] {
    &tokens[start..start + n]
}

/// Counts occurrences of `gram` in `tokens` by scanning every window.
fn count_occurrences(tokens: &[String], gram: &[String]) -> u64 {
    let n = gram.len();
    if tokens.len() < n {
        return 0;
    }
    let mut count = 0;
    for start in 0..=tokens.len() - n {
        if ngram_at(tokens, start, n) == gram {
            count += 1;
        }
    }
    count
}

/// Clipped n-gram matches of a hypothesis against a set of references,
/// plus the total number of hypothesis n-grams of that order.
pub fn clipped_matches(hyp: &[String], refs: &[Vec<String>], n: usize) -> (u64, u64) {
    if hyp.len() < n {
        return (0, 0);
    }
    let total = (hyp.len() - n + 1) as u64;
    // Walk distinct hypothesis n-grams; first occurrence position marks "distinct".
    let mut matches = 0;
    for start in 0..=hyp.len() - n {
        let gram = ngram_at(hyp, start, n);
        let first = (0..=hyp.len() - n).find(|&s| ngram_at(hyp, s, n) == gram);
        if first != Some(start) {
            continue; // already handled at its first occurrence
        }
        let hyp_count = count_occurrences(hyp, gram);
        let mut best_ref = 0;
        for r in refs {
            best_ref = best_ref.max(count_occurrences(r, gram));
        }
        matches += hyp_count.min(best_ref);
    }
    (matches, total)
}

/// Reference length closest to the hypothesis length; ties go to the
/// shorter reference.
pub fn closest_ref_len(hyp_len: usize, refs: &[Vec<String>]) -> usize {
    let mut best = refs[0].len();
    for r in refs.iter().skip(1) {
        let cand = r.len();
        let d_cand = (cand as i64 - hyp_len as i64).abs();
        let d_best = (best as i64 - hyp_len as i64).abs();
        if d_cand < d_best || (d_cand == d_best && cand < best) {
            best = cand;
        }
    }
    best
}

/// Corpus BLEU computed from raw strings by explicit counting.
///
/// `smooth` selects the add-one-on-counts fallback for orders >= 2 when
/// any pooled precision is zero; without it a zero precision zeroes the
/// whole score.
pub fn bleu_corpus(hyps: &[&str], refs: &[Vec<&str>], max_n: usize, smooth: bool) -> f64 {
    assert_eq!(hyps.len(), refs.len());
    assert!(!hyps.is_empty());
    let mut matches = vec![0u64; max_n];
    let mut totals = vec![0u64; max_n];
    let mut hyp_len_sum = 0u64;
    let mut ref_len_sum = 0u64;

    for (hyp_text, ref_texts) in hyps.iter().zip(refs) {
        let hyp = metric_tokens(hyp_text);
        let ref_tok: Vec<Vec<String>> = ref_texts.iter().map(|r| metric_tokens(r)).collect();
        hyp_len_sum += hyp.len() as u64;
        ref_len_sum += closest_ref_len(hyp.len(), &ref_tok) as u64;
        for n in 1..=max_n {
            let (m, t) = clipped_matches(&hyp, &ref_tok, n);
            matches[n - 1] += m;
            totals[n - 1] += t;
        }
    }

    if hyp_len_sum == 0 {
        return 0.0;
    }
    let needs_smoothing = (0..max_n).any(|i| matches[i] == 0);
    let mut log_sum = 0.0;
    for i in 0..max_n {
        let (m, t) = if smooth && needs_smoothing && i >= 1 {
            (matches[i] + 1, totals[i] + 1)
        } else {
            (matches[i], totals[i])
        };
        if m == 0 {
            return 0.0;
        }
        log_sum += (m as f64 / t as f64).ln() / max_n as f64;
    }
    let c = hyp_len_sum as f64;
    let r = ref_len_sum as f64;
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    bp * log_sum.exp() * 100.0
}

/// LCS length by memoized recursion (the implementation uses an iterative
/// DP table, so the two share no code path).
pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    fn go(
        a: &[String],
        b: &[String],
        i: usize,
        j: usize,
        memo: &mut HashMap<(usize, usize), usize>,
    ) -> usize {
        if i == a.len() || j == b.len() {
            return 0;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = if a[i] == b[j] {
            1 + go(a, b, i + 1, j + 1, memo)
        } else {
            go(a, b, i + 1, j, memo).max(go(a, b, i, j + 1, memo))
        };
        memo.insert((i, j), v);
        v
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

/// ROUGE-L precision/recall/F from raw strings.
pub fn rouge_l(hyp: &str, reference: &str, beta: f64) -> (f64, f64, f64) {
    let hyp_tok = metric_tokens(hyp);
    let ref_tok = metric_tokens(reference);
    let lcs = lcs_len(&hyp_tok, &ref_tok) as f64;
    if lcs == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let p = lcs / hyp_tok.len() as f64;
    let r = lcs / ref_tok.len() as f64;
    let f = (1.0 + beta * beta) * r * p / (r + beta * beta * p);
    (p, r, f)
}

/// Whitespace token count via regex, used to cross-check the fast splitter.
pub fn whitespace_count(text: &str) -> usize {
    let re = regex::Regex::new(r"\S+").unwrap();
    re.find_iter(text).count()
}

/// One raw item of the engineered funnel fixture.
pub struct FunnelFixtureItem {
    pub id: &'static str,
    pub target: String,
    pub source: String,
}

/// Stage names in funnel order with the expected remaining counts when
/// the fixture runs through the full pipeline (initial count 10).
pub const FUNNEL_EXPECTED: [(&str, u64); 6] = [
    ("boilerplate", 9),
    ("duplicates", 8),
    ("invalid-chars", 7),
    ("patterns", 6),
    ("length", 5),
    ("misc", 4),
];

pub const FUNNEL_KEPT_IDS: [&str; 4] = ["keep-1", "keep-2", "keep-3", "keep-4"];

fn stopword_run(words: usize) -> String {
    let bank = ["a", "de", "o", "que", "e", "para", "com", "não", "uma", "os"];
    (0..words)
        .map(|i| bank[i % bank.len()])
        .collect::<Vec<_>>()
        .join(" ")
}

fn good_text(marker: &str) -> String {
    // 100 function words plus a unique tail: long, stopword-dense, and
    // distinct per item so deduplication does not collapse keepers.
    format!("{} exclusivo {marker}", stopword_run(100))
}

/// A 10-item parallel fixture where each funnel stage drops exactly one
/// item, hand-traced:
///
///   1 keep-1            survives everything
///   2 drop-boilerplate  six words, no stopwords -> short/bad block
///   3 keep-2            survives everything
///   4 drop-duplicates   exact copy of keep-2's target text
///   5 drop-invalid      good text plus "smørrebrød" (ø is not allowed)
///   6 drop-patterns     good text starting with "Filtrar por"
///   7 drop-length       500 target + 401 source tokens = 901 > 900
///   8 drop-misc         good text with an unbalanced "("
///   9 keep-3            survives everything
///  10 keep-4            survives everything
pub fn funnel_fixture() -> Vec<FunnelFixtureItem> {
    let item = |id: &'static str, target: String, source: String| FunnelFixtureItem {
        id,
        target,
        source,
    };
    vec![
        item("keep-1", good_text("alfa"), "plain english sentence one".into()),
        item(
            "drop-boilerplate",
            "ligação rápida\ncomprar barato\nloja virtual".into(),
            "plain english sentence two".into(),
        ),
        item("keep-2", good_text("bravo"), "plain english sentence three".into()),
        item(
            "drop-duplicates",
            good_text("bravo"),
            "plain english sentence four".into(),
        ),
        item(
            "drop-invalid",
            format!("{} smørrebrød", good_text("carga")),
            "plain english sentence five".into(),
        ),
        item(
            "drop-patterns",
            format!("Filtrar por preço {}", good_text("delta")),
            "plain english sentence six".into(),
        ),
        item(
            "drop-length",
            stopword_run(500),
            vec!["word"; 401].join(" "),
        ),
        item(
            "drop-misc",
            format!("{} (aberto", good_text("eco")),
            "plain english sentence eight".into(),
        ),
        item("keep-3", good_text("foxtrot"), "plain english sentence nine".into()),
        item("keep-4", good_text("golfe"), "plain english sentence ten".into()),
    ]
}

/// Shared hand-sized fixture suite for metric parity checks: hypothesis
/// plus one or two references, mixing languages, punctuation, repeated
/// tokens, and length imbalances.
pub const METRIC_FIXTURE: &[(&str, &[&str])] = &[
    ("the cat sat on the mat", &["the cat sat on the mat"]),
    ("the cat sat on mat", &["the cat sat on the mat"]),
    ("o gato sentou no tapete", &["o gato sentou-se no tapete"]),
    ("a quick brown fox", &["the quick brown fox jumps"]),
    ("the the the the", &["the cat"]),
    ("completely different words", &["nothing shared here at all"]),
    (
        "ela comprou pão e leite",
        &["ela comprou pão e leite fresco", "ela comprou leite e pão"],
    ),
    ("um dois três quatro cinco", &["um dois três quatro cinco"]),
    ("hello, world!", &["hello world"]),
    (
        "the council approved the budget yesterday",
        &["the council approved the budget on tuesday"],
    ),
    ("não há nada aqui", &["não há nada ali", "nada há aqui"]),
    ("it rains a lot in november", &["it rains heavily in november"]),
    ("o relatório está pronto", &["o relatório final está pronto"]),
    (
        "she walked to the station slowly",
        &["she walked slowly to the station"],
    ),
    ("números 1 2 3", &["números 1 2 3"]),
    ("a b c d e f g", &["a b c x e f g"]),
    (
        "parliament voted against the proposal",
        &["the parliament voted against that proposal"],
    ),
    ("guerra e paz", &["guerra e paz"]),
    (
        "the weather was beautiful; we stayed outside",
        &["the weather was beautiful and we stayed outside"],
    ),
    ("comete erros, aprende sempre", &["comete erros e aprende sempre"]),
    (
        "long sentence with many common words that overlap partly",
        &["a long sentence with many common words which overlap partly"],
    ),
    ("x y z", &["q r s", "x y w"]),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clipped_counts_match_hand_tally() {
        // hyp "the the the the" vs ref "the cat": one distinct unigram,
        // clipped at the single "the" in the reference.
        let hyp = metric_tokens("the the the the");
        let refs = vec![metric_tokens("the cat")];
        let (m, t) = clipped_matches(&hyp, &refs, 1);
        assert_eq!((m, t), (1, 4));
    }

    #[test]
    fn lcs_of_toy_strings() {
        let a = metric_tokens("a b c d");
        let b = metric_tokens("a c d");
        assert_eq!(lcs_len(&a, &b), 3);
    }
}
