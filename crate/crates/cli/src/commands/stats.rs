//! `stats`: per-domain token statistics for a pair corpus.

use std::collections::BTreeMap;
use std::path::Path;

use retrocorpus::report::{corpus_stats, render_stats_csv, render_stats_table};
use retrocorpus::tokenize::{Tokenizer, TokenizerSpec};

use super::{config_err, data_err, read_pairs_soft, write_error_sidecar, write_json};
use crate::{CommandOutcome, Failure};

pub fn run(input: &Path, tokenizer_arg: &str, out: &Path, format: &str) -> Result<CommandOutcome, Failure> {
    let spec = TokenizerSpec::from_arg(tokenizer_arg).map_err(config_err)?;
    let tokenizer = Tokenizer::load(&spec).map_err(config_err)?;

    let (pairs, line_errors) = read_pairs_soft(input)?;
    let stats = corpus_stats(&pairs, &tokenizer).map_err(data_err)?;
    log::info!(
        "stats: {} pairs over {} domains",
        stats.all.n_docs,
        stats.domains.len()
    );

    match format {
        "json" => write_json(out, &serde_json::to_value(&stats).map_err(data_err)?)?,
        "table" => std::fs::write(out, render_stats_table(&stats)).map_err(data_err)?,
        "csv" => std::fs::write(out, render_stats_csv(&stats)).map_err(data_err)?,
        other => return Err(Failure::Config(format!("unknown format '{other}'"))),
    }

    let mut outputs = vec![out.to_path_buf()];
    let error_count = line_errors.len() as u64;
    if let Some(path) = write_error_sidecar(&line_errors, None, out, "errors.jsonl")? {
        outputs.push(path);
    }

    let mut summary = BTreeMap::new();
    summary.insert("pairs".to_string(), stats.all.n_docs.into());
    summary.insert("domains".to_string(), (stats.domains.len() as u64).into());
    summary.insert("target_tokens".to_string(), stats.all.target.total.into());
    summary.insert("source_tokens".to_string(), stats.all.source.total.into());
    summary.insert("error_rows".to_string(), error_count.into());

    Ok(CommandOutcome {
        inputs: vec![input.to_path_buf()],
        outputs,
        primary: out.to_path_buf(),
        effective_config: serde_json::json!({ "tokenizer": spec, "format": format }),
        summary,
        data_errors: error_count,
    })
}
