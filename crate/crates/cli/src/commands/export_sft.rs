//! `export-sft`: pair corpus -> instruction-tuning JSONL.

use std::collections::BTreeMap;
use std::path::PathBuf;

use retrocorpus::jsonl::JsonlWriter;
use retrocorpus::sft::{export_corpus, PromptTemplate};
use retrocorpus::tokenize::{Tokenizer, TokenizerSpec};

use super::{config_err, data_err, read_pairs_soft, sidecar_path, write_error_sidecar};
use crate::{CommandOutcome, Failure};

pub struct Params {
    pub input: PathBuf,
    pub out: PathBuf,
    pub template: Option<PathBuf>,
    pub tokenizer: String,
    pub max_tokens: u64,
    pub skipped: Option<PathBuf>,
}

pub fn run(params: Params) -> Result<CommandOutcome, Failure> {
    let template = match &params.template {
        Some(path) => PromptTemplate::load(path).map_err(config_err)?,
        None => PromptTemplate::default(),
    };
    let spec = TokenizerSpec::from_arg(&params.tokenizer).map_err(config_err)?;
    let tokenizer = Tokenizer::load(&spec).map_err(config_err)?;
    if params.max_tokens == 0 {
        return Err(Failure::Config("--max-tokens must be positive".to_string()));
    }

    let (pairs, line_errors) = read_pairs_soft(&params.input)?;
    let summary_counts =
        export_corpus(&pairs, &template, &tokenizer, params.max_tokens, &params.out)
            .map_err(data_err)?;
    log::info!(
        "export-sft: {} pairs -> {} records, {} skipped",
        pairs.len(),
        summary_counts.written,
        summary_counts.skipped.len()
    );

    let mut outputs = vec![params.out.clone()];
    if !summary_counts.skipped.is_empty() {
        let path = params
            .skipped
            .clone()
            .unwrap_or_else(|| sidecar_path(&params.out, "skipped.jsonl"));
        let mut writer = JsonlWriter::create(&path).map_err(data_err)?;
        for record in &summary_counts.skipped {
            writer.write(record).map_err(data_err)?;
        }
        writer.finish().map_err(data_err)?;
        outputs.push(path);
    }
    let error_count = line_errors.len() as u64;
    if let Some(path) = write_error_sidecar(&line_errors, None, &params.out, "errors.jsonl")? {
        outputs.push(path);
    }

    let mut summary = BTreeMap::new();
    summary.insert("pairs".to_string(), (pairs.len() as u64).into());
    summary.insert("written".to_string(), summary_counts.written.into());
    summary.insert("skipped".to_string(), (summary_counts.skipped.len() as u64).into());
    summary.insert("error_rows".to_string(), error_count.into());

    let effective_config = serde_json::json!({
        "template": template,
        "tokenizer": spec,
        "max_tokens": params.max_tokens,
    });

    Ok(CommandOutcome {
        inputs: vec![params.input.clone()],
        outputs,
        primary: params.out.clone(),
        effective_config,
        summary,
        data_errors: error_count,
    })
}
