//! `ingest`: source corpus -> canonical document JSONL.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use retrocorpus::ingest::{load_corpus, IngestSpec};
use retrocorpus::jsonl::JsonlWriter;

use super::{config_err, data_err, write_error_sidecar};
use crate::{CommandOutcome, Failure};

pub fn run(
    spec_path: &Path,
    out: &Path,
    errors_path: Option<PathBuf>,
) -> Result<CommandOutcome, Failure> {
    let spec = IngestSpec::load(spec_path).map_err(config_err)?;
    let reader = load_corpus(&spec).map_err(config_err)?;

    let mut writer = JsonlWriter::create(out).map_err(data_err)?;
    let mut errors = Vec::new();
    let mut rows = 0u64;
    let mut dropped_by_label: BTreeMap<String, u64> = BTreeMap::new();
    let mut dropped = 0u64;

    for item in reader {
        rows += 1;
        match item {
            Err(e) => errors.push(e),
            Ok(doc) => {
                if let Some(accept) = &spec.accept_varieties {
                    if !accept.contains(&doc.variety) {
                        dropped += 1;
                        *dropped_by_label.entry(doc.variety.to_string()).or_insert(0) += 1;
                        continue;
                    }
                }
                writer.write(&doc).map_err(data_err)?;
            }
        }
    }
    let written = writer.finish().map_err(data_err)?;
    log::info!(
        "ingest: {rows} rows -> {written} documents, {dropped} dropped by label, {} error rows",
        errors.len()
    );

    let mut outputs = vec![out.to_path_buf()];
    let error_count = errors.len() as u64;
    if let Some(path) = write_error_sidecar(&errors, errors_path, out, "errors.jsonl")? {
        outputs.push(path);
    }

    let mut summary = BTreeMap::new();
    summary.insert("rows".to_string(), rows.into());
    summary.insert("documents".to_string(), written.into());
    summary.insert("dropped_by_label".to_string(), serde_json::to_value(&dropped_by_label).unwrap());
    summary.insert("error_rows".to_string(), error_count.into());

    Ok(CommandOutcome {
        inputs: vec![spec.path.clone()],
        outputs,
        primary: out.to_path_buf(),
        effective_config: serde_json::to_value(&spec).map_err(data_err)?,
        summary,
        data_errors: error_count,
    })
}
