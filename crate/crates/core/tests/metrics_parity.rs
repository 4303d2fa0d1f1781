//! Cross-checks the metric implementations against the brute-force
//! reference implementations on the shared fixture suite.

use retrocorpus::metrics::{
    bleu_corpus, exact_match_rate, mean_with_t_ci, metric_tokens, rouge_l, BleuOptions, EvalPair,
    Smoothing,
};

const TOLERANCE: f64 = 1e-9;

fn fixture_pairs() -> Vec<EvalPair> {
    refimpl::METRIC_FIXTURE
        .iter()
        .map(|(hyp, refs)| EvalPair::new(hyp, refs.iter().copied()).unwrap())
        .collect()
}

#[test]
fn fixture_suite_is_large_enough() {
    assert!(refimpl::METRIC_FIXTURE.len() >= 20);
}

#[test]
fn tokenizers_agree() {
    for (hyp, refs) in refimpl::METRIC_FIXTURE {
        assert_eq!(metric_tokens(hyp), refimpl::metric_tokens(hyp));
        for r in *refs {
            assert_eq!(metric_tokens(r), refimpl::metric_tokens(r));
        }
    }
}

#[test]
fn corpus_bleu_matches_oracle_in_both_smoothing_modes() {
    let pairs = fixture_pairs();
    let hyps: Vec<&str> = refimpl::METRIC_FIXTURE.iter().map(|(h, _)| *h).collect();
    let refs: Vec<Vec<&str>> = refimpl::METRIC_FIXTURE
        .iter()
        .map(|(_, r)| r.to_vec())
        .collect();

    for (smoothing, flag) in [(Smoothing::AddOne, true), (Smoothing::None, false)] {
        let ours = bleu_corpus(&pairs, BleuOptions { max_n: 4, smoothing }).unwrap();
        let oracle = refimpl::bleu_corpus(&hyps, &refs, 4, flag);
        assert!(
            (ours.value - oracle).abs() < TOLERANCE,
            "{smoothing:?}: {} vs oracle {oracle}",
            ours.value
        );
    }
}

#[test]
fn per_pair_bleu_matches_oracle() {
    for (hyp, refs) in refimpl::METRIC_FIXTURE {
        let pair = vec![EvalPair::new(hyp, refs.iter().copied()).unwrap()];
        for (smoothing, flag) in [(Smoothing::AddOne, true), (Smoothing::None, false)] {
            let ours = bleu_corpus(&pair, BleuOptions { max_n: 4, smoothing }).unwrap();
            let oracle = refimpl::bleu_corpus(&[hyp], &[refs.to_vec()], 4, flag);
            assert!(
                (ours.value - oracle).abs() < TOLERANCE,
                "pair {hyp:?} ({smoothing:?}): {} vs {oracle}",
                ours.value
            );
        }
    }
}

#[test]
fn rouge_l_matches_oracle_per_pair() {
    for (hyp, refs) in refimpl::METRIC_FIXTURE {
        let pair = EvalPair::new(hyp, refs.iter().copied()).unwrap();
        let ours = rouge_l(&pair, 1.2);
        let (p, r, f) = refimpl::rouge_l(hyp, refs[0], 1.2);
        assert!((ours.precision - p).abs() < TOLERANCE, "P on {hyp:?}");
        assert!((ours.recall - r).abs() < TOLERANCE, "R on {hyp:?}");
        assert!((ours.f - f).abs() < TOLERANCE, "F on {hyp:?}");
    }
}

#[test]
fn self_bleu_is_exactly_100_and_disjoint_is_exactly_0() {
    let identical: Vec<EvalPair> = refimpl::METRIC_FIXTURE
        .iter()
        .map(|(h, _)| EvalPair::new(h, [*h]).unwrap())
        .collect();
    let score = bleu_corpus(&identical, BleuOptions::default()).unwrap();
    assert_eq!(score.value, 100.0);

    let disjoint = vec![EvalPair::new("aa bb cc dd ee", ["xx yy zz ww vv"]).unwrap()];
    let score = bleu_corpus(
        &disjoint,
        BleuOptions {
            max_n: 4,
            smoothing: Smoothing::None,
        },
    )
    .unwrap();
    assert_eq!(score.value, 0.0);
}

#[test]
fn exact_match_rate_on_fixture() {
    let pairs = fixture_pairs();
    // Hand count of fixture entries whose hypothesis equals a reference:
    // entries 1, 8, 15, 18 (1-based).
    let expected = 4.0 / pairs.len() as f64;
    assert!((exact_match_rate(&pairs) - expected).abs() < TOLERANCE);
}

#[test]
fn t_quantile_matches_published_table() {
    // t for 4 degrees of freedom at 97.5%: 2.776 in standard tables.
    let result = mean_with_t_ci(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.95).unwrap();
    let half = result.ci_high.unwrap() - result.value;
    let s = 1.5811388300841898f64; // sqrt(2.5)
    let t = half / (s / 5f64.sqrt());
    assert!((t - 2.776).abs() < 1e-3, "t = {t}");
}
