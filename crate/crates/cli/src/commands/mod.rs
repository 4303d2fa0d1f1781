//! Subcommand implementations and their shared I/O helpers.

pub mod audit;
pub mod eval;
pub mod export_sft;
pub mod filter;
pub mod ingest;
pub mod stats;
pub mod translate;
pub mod vid;

use std::path::{Path, PathBuf};

use retrocorpus::corpus::{normalize_text, Document, DomainTag, ParallelPair, Variety};
use retrocorpus::jsonl::{self, JsonlWriter, LineError};

use crate::Failure;

pub fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

pub fn data_err(e: impl std::fmt::Display) -> Failure {
    Failure::Data(e.to_string())
}

/// Reads a pair file fail-soft, returning pairs and line errors.
pub fn read_pairs_soft(path: &Path) -> Result<(Vec<ParallelPair>, Vec<LineError>), Failure> {
    let reader = jsonl::read_pairs(path).map_err(data_err)?;
    let mut pairs = Vec::new();
    let mut errors = Vec::new();
    for item in reader {
        match item {
            Ok(pair) => pairs.push(pair),
            Err(e) => errors.push(e),
        }
    }
    Ok((pairs, errors))
}

/// Reads a document file fail-soft.
pub fn read_documents_soft(path: &Path) -> Result<(Vec<Document>, Vec<LineError>), Failure> {
    let reader = jsonl::read_documents(path).map_err(data_err)?;
    let mut docs = Vec::new();
    let mut errors = Vec::new();
    for item in reader {
        match item {
            Ok(doc) => docs.push(doc),
            Err(e) => errors.push(e),
        }
    }
    Ok((docs, errors))
}

/// Evaluation inputs are lighter-weight than full documents: any JSONL
/// whose lines carry a `text` field (plus optional `id` and, on the
/// reference side, optional `refs` array) works.
pub struct EvalLine {
    pub id: String,
    pub text: String,
    pub extra_refs: Vec<String>,
}

pub fn read_eval_lines(path: &Path) -> Result<(Vec<EvalLine>, Vec<LineError>), Failure> {
    let reader = jsonl::read_raw_lines(path).map_err(data_err)?;
    let mut lines = Vec::new();
    let mut errors = Vec::new();
    for item in reader {
        match item {
            Err(e) => errors.push(e),
            Ok((line_no, value)) => {
                let Some(text) = value.get("text").and_then(|t| t.as_str()) else {
                    errors.push(LineError {
                        line: line_no,
                        message: "missing 'text' field".to_string(),
                    });
                    continue;
                };
                let id = value
                    .get("id")
                    .and_then(|v| v.as_str())
                    .map(str::to_string)
                    .unwrap_or_else(|| line_no.to_string());
                let extra_refs = value
                    .get("refs")
                    .and_then(|v| v.as_array())
                    .map(|items| {
                        items
                            .iter()
                            .filter_map(|i| i.as_str())
                            .map(str::to_string)
                            .collect()
                    })
                    .unwrap_or_default();
                lines.push(EvalLine {
                    id,
                    text: normalize_text(text),
                    extra_refs,
                });
            }
        }
    }
    Ok((lines, errors))
}

/// Converts an eval line into a bare document for the classifier.
pub fn eval_line_to_document(line: &EvalLine) -> Document {
    Document {
        id: line.id.clone(),
        text: line.text.clone(),
        variety: Variety::Unlabeled,
        domain: DomainTag::Other,
        source: "eval".to_string(),
        meta: Default::default(),
    }
}

/// Writes line errors to a sidecar JSONL when any exist; returns the
/// path actually written.
pub fn write_error_sidecar(
    errors: &[LineError],
    explicit: Option<PathBuf>,
    default_for: &Path,
    suffix: &str,
) -> Result<Option<PathBuf>, Failure> {
    if errors.is_empty() {
        return Ok(None);
    }
    let path = explicit.unwrap_or_else(|| sidecar_path(default_for, suffix));
    let mut writer = JsonlWriter::create(&path).map_err(data_err)?;
    for error in errors {
        writer.write(error).map_err(data_err)?;
    }
    writer.finish().map_err(data_err)?;
    Ok(Some(path))
}

/// `<out>.<suffix>` next to the output file.
pub fn sidecar_path(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    name.push('.');
    name.push_str(suffix);
    out.with_file_name(name)
}

/// Writes a JSON value prettily to a file, creating parent directories.
pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Failure> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(data_err)?;
        }
    }
    let mut rendered = serde_json::to_string_pretty(value).map_err(data_err)?;
    rendered.push('\n');
    std::fs::write(path, rendered).map_err(data_err)
}
