//! `filter`: the quality funnel over a document or pair JSONL file.

use std::collections::BTreeMap;
use std::path::PathBuf;

use retrocorpus::config::PipelineConfig;
use retrocorpus::filters::{run_pipeline_parallel, PipelineItem};
use retrocorpus::jsonl::{self, JsonlWriter, LineError};
use retrocorpus::tokenize::{Tokenizer, TokenizerSpec};

use super::{config_err, data_err, write_error_sidecar, write_json};
use crate::{CommandOutcome, Failure};

pub struct Params {
    pub input: PathBuf,
    pub out: PathBuf,
    pub config: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub verdicts: Option<PathBuf>,
    pub tokenizer: Option<String>,
    pub workers: usize,
}

/// Lines with a `target_text` key are pairs, everything else documents.
fn read_items(params: &Params) -> Result<(Vec<PipelineItem>, Vec<LineError>), Failure> {
    let reader = jsonl::read_raw_lines(&params.input).map_err(data_err)?;
    let mut items = Vec::new();
    let mut errors = Vec::new();
    for entry in reader {
        match entry {
            Err(e) => errors.push(e),
            Ok((line_no, value)) => {
                let parsed: Result<PipelineItem, _> = serde_json::from_value(value);
                match parsed {
                    Ok(item) => items.push(item),
                    Err(e) => errors.push(LineError {
                        line: line_no,
                        message: e.to_string(),
                    }),
                }
            }
        }
    }
    Ok((items, errors))
}

pub fn run(params: Params) -> Result<CommandOutcome, Failure> {
    let config = match &params.config {
        Some(path) => PipelineConfig::load(path).map_err(config_err)?,
        None => PipelineConfig::default(),
    };
    let settings = config.filter_settings().map_err(config_err)?;

    let tokenizer_spec = match &params.tokenizer {
        Some(arg) => Some(TokenizerSpec::from_arg(arg).map_err(config_err)?),
        None => config.tokenizer.clone(),
    };
    let tokenizer = match &tokenizer_spec {
        Some(spec) => Some(Tokenizer::load(spec).map_err(config_err)?),
        None => None,
    };
    // The length stage needs trustworthy counts; a pair stream with the
    // stage enabled but no tokenizer configured is a config error.
    let (items, line_errors) = read_items(&params)?;
    let pairs_present = items.iter().any(|i| matches!(i, PipelineItem::Pair(_)));
    if pairs_present && settings.toggles.length && tokenizer.is_none() {
        return Err(Failure::Config(
            "length stage enabled for a pair stream but no tokenizer configured; \
             pass --tokenizer or set [tokenizer] in the config"
                .to_string(),
        ));
    }

    let initial = items.len();
    let outcome = run_pipeline_parallel(items, &settings, tokenizer.as_ref(), params.workers)
        .map_err(data_err)?;
    log::info!(
        "filter: {initial} items -> {} kept through {} stages",
        outcome.kept.len(),
        outcome.report.stages.len()
    );

    let mut writer = JsonlWriter::create(&params.out).map_err(data_err)?;
    for item in &outcome.kept {
        writer.write(item).map_err(data_err)?;
    }
    writer.finish().map_err(data_err)?;

    let mut outputs = vec![params.out.clone()];
    if let Some(report_path) = &params.report {
        write_json(report_path, &serde_json::to_value(&outcome.report).map_err(data_err)?)?;
        outputs.push(report_path.clone());
    }
    if let Some(verdicts_path) = &params.verdicts {
        let mut verdict_writer = JsonlWriter::create(verdicts_path).map_err(data_err)?;
        for verdict in &outcome.verdicts {
            verdict_writer.write(verdict).map_err(data_err)?;
        }
        verdict_writer.finish().map_err(data_err)?;
        outputs.push(verdicts_path.clone());
    }
    let error_count = line_errors.len() as u64;
    if let Some(path) = write_error_sidecar(&line_errors, None, &params.out, "errors.jsonl")? {
        outputs.push(path);
    }

    let mut summary = BTreeMap::new();
    summary.insert("initial".to_string(), outcome.report.initial.into());
    summary.insert("kept".to_string(), (outcome.kept.len() as u64).into());
    summary.insert(
        "funnel".to_string(),
        serde_json::to_value(&outcome.report).map_err(data_err)?,
    );
    summary.insert("error_rows".to_string(), error_count.into());

    let effective_config = serde_json::json!({
        "pipeline": config,
        "tokenizer": tokenizer_spec,
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
