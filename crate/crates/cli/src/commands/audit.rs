//! `audit`: variety-invariance comparison of two aligned pair files.

use std::collections::BTreeMap;
use std::path::Path;

use retrocorpus::translate::variety_invariance_audit;

use super::{data_err, read_pairs_soft, write_json};
use crate::{CommandOutcome, Failure};

pub fn run(a_path: &Path, b_path: &Path, out: &Path) -> Result<CommandOutcome, Failure> {
    let (pairs_a, errors_a) = read_pairs_soft(a_path)?;
    let (pairs_b, errors_b) = read_pairs_soft(b_path)?;

    let report = variety_invariance_audit(&pairs_a, &pairs_b).map_err(data_err)?;
    write_json(out, &serde_json::to_value(&report).map_err(data_err)?)?;
    log::info!(
        "audit: n={} exact_match_rate={:.4} bleu={:.2}",
        report.n,
        report.exact_match_rate,
        report.bleu
    );

    let error_count = (errors_a.len() + errors_b.len()) as u64;
    let mut summary = BTreeMap::new();
    summary.insert("n".to_string(), report.n.into());
    summary.insert("exact_match_rate".to_string(), report.exact_match_rate.into());
    summary.insert("bleu".to_string(), report.bleu.into());
    summary.insert("error_rows".to_string(), error_count.into());

    Ok(CommandOutcome {
        inputs: vec![a_path.to_path_buf(), b_path.to_path_buf()],
        outputs: vec![out.to_path_buf()],
        primary: out.to_path_buf(),
        effective_config: serde_json::json!({}),
        summary,
        data_errors: error_count,
    })
}
