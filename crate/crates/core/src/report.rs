//! Corpus statistics tables, funnel rendering, and evaluation report
//! assembly. All reductions are associative, so stats are invariant
//! under any ordering or partitioning of the corpus.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{DomainTag, ParallelPair};
use crate::error::TokenizerError;
use crate::filters::FunnelReport;
use crate::tokenize::Tokenizer;

/// Min/max/mean/total token counts for one side of the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideStats {
    pub min: u64,
    pub max: u64,
    pub mean: f64,
    pub total: u64,
}

impl SideStats {
    fn zero() -> SideStats {
        SideStats {
            min: 0,
            max: 0,
            mean: 0.0,
            total: 0,
        }
    }
}

/// Per-domain document and token statistics; `target` is the variety
/// side, `source` the resource-rich side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainStats {
    pub domain: DomainTag,
    pub n_docs: u64,
    pub target: SideStats,
    pub source: SideStats,
}

/// The full statistics table: one row per domain present plus the
/// aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub domains: Vec<DomainStats>,
    pub all: DomainStats,
}

#[derive(Default, Clone, Copy)]
struct SideAccumulator {
    min: Option<u64>,
    max: u64,
    total: u64,
}

impl SideAccumulator {
    fn add(&mut self, count: u64) {
        self.min = Some(self.min.map_or(count, |m| m.min(count)));
        self.max = self.max.max(count);
        self.total += count;
    }

    fn finish(self, n_docs: u64) -> SideStats {
        if n_docs == 0 {
            return SideStats::zero();
        }
        SideStats {
            min: self.min.unwrap_or(0),
            max: self.max,
            mean: self.total as f64 / n_docs as f64,
            total: self.total,
        }
    }
}

/// Computes per-domain and aggregate token statistics for a pair corpus.
/// An empty corpus yields an empty table with an explicit zero aggregate.
pub fn corpus_stats(pairs: &[ParallelPair], tokenizer: &Tokenizer) -> Result<CorpusStats, TokenizerError> {
    #[derive(Default, Clone, Copy)]
    struct Bucket {
        n_docs: u64,
        target: SideAccumulator,
        source: SideAccumulator,
    }

    let mut buckets: BTreeMap<DomainTag, Bucket> = BTreeMap::new();
    let mut all = Bucket::default();
    for pair in pairs {
        let target_count = tokenizer.count_tokens(&pair.target_text)?;
        let source_count = tokenizer.count_tokens(&pair.source_text)?;
        for bucket in [buckets.entry(pair.domain).or_default(), &mut all] {
            bucket.n_docs += 1;
            bucket.target.add(target_count);
            bucket.source.add(source_count);
        }
    }

    let row = |domain: DomainTag, bucket: &Bucket| DomainStats {
        domain,
        n_docs: bucket.n_docs,
        target: bucket.target.finish(bucket.n_docs),
        source: bucket.source.finish(bucket.n_docs),
    };

    // Emit rows in the fixed presentation order of DomainTag::ALL.
    let domains = DomainTag::ALL
        .iter()
        .filter_map(|d| buckets.get(d).map(|b| row(*d, b)))
        .collect();
    Ok(CorpusStats {
        domains,
        all: row(DomainTag::Other, &all),
    })
}

fn format_row(cells: &[String], widths: &[usize]) -> String {
    cells
        .iter()
        .zip(widths)
        .map(|(c, w)| format!("{c:>w$}", w = w))
        .collect::<Vec<_>>()
        .join("  ")
}

const STATS_HEADER: [&str; 10] = [
    "domain", "n_docs", "tgt_min", "tgt_max", "tgt_mean", "tgt_total", "src_min", "src_max",
    "src_mean", "src_total",
];

fn stats_cells(row: &DomainStats, label: &str) -> Vec<String> {
    vec![
        label.to_string(),
        row.n_docs.to_string(),
        row.target.min.to_string(),
        row.target.max.to_string(),
        format!("{:.1}", row.target.mean),
        row.target.total.to_string(),
        row.source.min.to_string(),
        row.source.max.to_string(),
        format!("{:.1}", row.source.mean),
        row.source.total.to_string(),
    ]
}

/// Aligned plain-text rendering of the statistics table; means shown at
/// one decimal (raw values live in the JSON form).
pub fn render_stats_table(stats: &CorpusStats) -> String {
    let mut rows: Vec<Vec<String>> = vec![STATS_HEADER.iter().map(|s| s.to_string()).collect()];
    for row in &stats.domains {
        rows.push(stats_cells(row, row.domain.as_str()));
    }
    rows.push(stats_cells(&stats.all, "all"));

    let mut widths = vec![0usize; STATS_HEADER.len()];
    for row in &rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.chars().count());
        }
    }
    rows.iter()
        .map(|r| format_row(r, &widths))
        .collect::<Vec<_>>()
        .join("\n")
        + "\n"
}

/// CSV rendering of the statistics table.
pub fn render_stats_csv(stats: &CorpusStats) -> String {
    let mut out = String::new();
    out.push_str(&STATS_HEADER.join(","));
    out.push('\n');
    for row in &stats.domains {
        out.push_str(&stats_cells(row, row.domain.as_str()).join(","));
        out.push('\n');
    }
    out.push_str(&stats_cells(&stats.all, "all").join(","));
    out.push('\n');
    out
}

/// Text rendering of a funnel report with remaining and dropped counts
/// per stage.
pub fn render_funnel(report: &FunnelReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:>14}  {:>10}  {:>8}\n", "stage", "remaining", "dropped"));
    out.push_str(&format!("{:>14}  {:>10}  {:>8}\n", "(input)", report.initial, "-"));
    for stage in &report.stages {
        out.push_str(&format!(
            "{:>14}  {:>10}  {:>8}\n",
            stage.name, stage.remaining, stage.dropped
        ));
    }
    out
}

/// One metric value for one system on one benchmark. `value` is `None`
/// when the metric was undefined, with the reason alongside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub system: String,
    pub benchmark: String,
    pub metric: String,
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_low: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_high: Option<f64>,
    pub n: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

/// Sorts records by (system, benchmark, metric) and wraps them into the
/// report document. Key order is stable, so serialized reports diff
/// cleanly against goldens.
pub fn assemble_eval_report(mut records: Vec<EvalRecord>) -> serde_json::Value {
    records.sort_by(|a, b| {
        (a.system.as_str(), a.benchmark.as_str(), a.metric.as_str()).cmp(&(
            b.system.as_str(),
            b.benchmark.as_str(),
            b.metric.as_str(),
        ))
    });
    serde_json::json!({ "records": records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::FunnelStage;
    use chrono::TimeZone;

    fn pair(id: &str, domain: DomainTag, target: &str, source: &str) -> ParallelPair {
        ParallelPair {
            id: id.to_string(),
            source_text: source.to_string(),
            target_text: target.to_string(),
            domain,
            backend_id: "mock".to_string(),
            created_at: chrono::Utc.timestamp_opt(0, 0).unwrap(),
        }
    }

    #[test]
    fn single_pair_row_is_degenerate() {
        let pairs = vec![pair("1", DomainTag::Web, "a b c d e f g h i j", "x y z w v u t")];
        let stats = corpus_stats(&pairs, &Tokenizer::Whitespace).unwrap();
        assert_eq!(stats.domains.len(), 1);
        let row = &stats.domains[0];
        assert_eq!((row.target.min, row.target.max, row.target.total), (10, 10, 10));
        assert_eq!(row.target.mean, 10.0);
        assert_eq!((row.source.min, row.source.max, row.source.total), (7, 7, 7));
    }

    #[test]
    fn aggregate_row_matches_hand_computation() {
        // legal: target 3 and 5 tokens, source 2 and 3; web: target 2, source 3.
        let pairs = vec![
            pair("1", DomainTag::Legal, "a b c", "x y"),
            pair("2", DomainTag::Legal, "a b c d e", "x y z"),
            pair("3", DomainTag::Web, "um dois", "one two four"),
        ];
        let stats = corpus_stats(&pairs, &Tokenizer::Whitespace).unwrap();
        assert_eq!(stats.domains.len(), 2);

        let legal = stats.domains.iter().find(|r| r.domain == DomainTag::Legal).unwrap();
        assert_eq!(legal.n_docs, 2);
        assert_eq!((legal.target.min, legal.target.max, legal.target.total), (3, 5, 8));
        assert_eq!(legal.target.mean, 4.0);
        assert_eq!((legal.source.min, legal.source.max, legal.source.total), (2, 3, 5));
        assert_eq!(legal.source.mean, 2.5);

        let all = &stats.all;
        assert_eq!(all.n_docs, 3);
        assert_eq!((all.target.min, all.target.max, all.target.total), (2, 5, 10));
        assert_eq!((all.source.min, all.source.max, all.source.total), (2, 3, 8));
        assert!((all.target.mean - 10.0 / 3.0).abs() < 1e-12);

        // Aggregate equals sum/extrema of the domain rows.
        let sum: u64 = stats.domains.iter().map(|r| r.target.total).sum();
        assert_eq!(all.target.total, sum);
        let min = stats.domains.iter().map(|r| r.target.min).min().unwrap();
        let max = stats.domains.iter().map(|r| r.target.max).max().unwrap();
        assert_eq!((all.target.min, all.target.max), (min, max));
    }

    #[test]
    fn empty_corpus_has_zero_aggregate() {
        let stats = corpus_stats(&[], &Tokenizer::Whitespace).unwrap();
        assert!(stats.domains.is_empty());
        assert_eq!(stats.all.n_docs, 0);
        assert_eq!(stats.all.target.total, 0);
    }

    #[test]
    fn funnel_rendering_shows_deltas() {
        let report = FunnelReport {
            initial: 10,
            stages: vec![
                FunnelStage {
                    name: "boilerplate".to_string(),
                    remaining: 9,
                    dropped: 1,
                },
                FunnelStage {
                    name: "duplicates".to_string(),
                    remaining: 8,
                    dropped: 1,
                },
            ],
        };
        let text = render_funnel(&report);
        assert!(text.contains("boilerplate"));
        assert!(text.contains("10"));
        assert!(text.lines().count() == 4);

        let empty = FunnelReport {
            initial: 0,
            stages: vec![],
        };
        assert_eq!(render_funnel(&empty).lines().count(), 2); // header + input row
    }

    #[test]
    fn eval_report_is_sorted_and_handles_missing_values() {
        let record = |system: &str, metric: &str, value: Option<f64>| EvalRecord {
            system: system.to_string(),
            benchmark: "bench".to_string(),
            metric: metric.to_string(),
            value,
            ci_low: None,
            ci_high: None,
            n: 2,
            reason: value.is_none().then(|| "undefined".to_string()),
            metadata: BTreeMap::new(),
        };
        let report = assemble_eval_report(vec![
            record("zeta", "bleu", Some(10.0)),
            record("alpha", "vid", None),
            record("alpha", "bleu", Some(20.0)),
        ]);
        let records = report["records"].as_array().unwrap();
        assert_eq!(records[0]["system"], "alpha");
        assert_eq!(records[0]["metric"], "bleu");
        assert_eq!(records[1]["metric"], "vid");
        assert!(records[1]["value"].is_null());
        assert_eq!(records[1]["reason"], "undefined");
        assert_eq!(records[2]["system"], "zeta");
    }
}
