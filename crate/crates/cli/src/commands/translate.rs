//! `translate`: documents -> parallel pairs through a backend.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use retrocorpus::jsonl::JsonlWriter;
use retrocorpus::translate::{
    build_backend, BackendKind, BackendSpec, Direction, Gateway, TranslateOptions,
    TranslationCache,
};

use super::{config_err, data_err, read_documents_soft, sidecar_path};
use crate::{CommandOutcome, Failure};

pub struct Params {
    pub input: PathBuf,
    pub out: PathBuf,
    pub backend: String,
    pub cache: Option<PathBuf>,
    pub direction: String,
    pub dead_letter: Option<PathBuf>,
    pub created_at: Option<String>,
    pub workers: usize,
}

fn load_backend_spec(arg: &str) -> Result<BackendSpec, Failure> {
    if arg == "mock-identity" {
        return Ok(BackendSpec::mock_identity());
    }
    let path = Path::new(arg);
    if !path.exists() {
        return Err(Failure::Config(format!(
            "backend '{arg}' is neither a builtin name nor an existing spec file"
        )));
    }
    BackendSpec::load(path).map_err(config_err)
}

pub fn run(params: Params) -> Result<CommandOutcome, Failure> {
    let spec = load_backend_spec(&params.backend)?;
    let direction = Direction::parse(&params.direction).map_err(config_err)?;
    let created_at = match &params.created_at {
        Some(raw) => Some(
            DateTime::parse_from_rfc3339(raw)
                .map(|t| t.with_timezone(&Utc))
                .map_err(|e| Failure::Config(format!("invalid --created-at '{raw}': {e}")))?,
        ),
        // Mock runs must be byte-reproducible regardless of cache state;
        // HTTP runs take their timestamps from the cache entries.
        None => match spec.kind {
            BackendKind::HttpService => None,
            _ => Some(TranslateOptions::fixed_epoch()),
        },
    };

    let backend = build_backend(&spec).map_err(config_err)?;
    let cache = match &params.cache {
        Some(dir) => Some(TranslationCache::open(dir).map_err(data_err)?),
        None => None,
    };
    let gateway = Gateway::new(backend.as_ref(), cache.as_ref(), &spec);

    let (docs, line_errors) = read_documents_soft(&params.input)?;
    let total_docs = docs.len();
    let options = TranslateOptions {
        direction: direction.clone(),
        workers: params.workers,
        created_at,
    };
    let outcome = gateway.translate_batch(docs, &options);
    log::info!(
        "translate: {total_docs} documents -> {} pairs, {} dead-lettered, {} backend calls, {} cache hits",
        outcome.pairs.len(),
        outcome.dead.len(),
        outcome.backend_calls,
        outcome.cache_hits
    );

    let mut writer = JsonlWriter::create(&params.out).map_err(data_err)?;
    for pair in &outcome.pairs {
        writer.write(pair).map_err(data_err)?;
    }
    writer.finish().map_err(data_err)?;

    let mut outputs = vec![params.out.clone()];
    if !outcome.dead.is_empty() {
        let path = params
            .dead_letter
            .clone()
            .unwrap_or_else(|| sidecar_path(&params.out, "dead.jsonl"));
        let mut dead_writer = JsonlWriter::create(&path).map_err(data_err)?;
        for letter in &outcome.dead {
            dead_writer.write(letter).map_err(data_err)?;
        }
        dead_writer.finish().map_err(data_err)?;
        outputs.push(path);
    }

    let mut summary = BTreeMap::new();
    summary.insert("documents".to_string(), (total_docs as u64).into());
    summary.insert("pairs".to_string(), (outcome.pairs.len() as u64).into());
    summary.insert("dead_letters".to_string(), (outcome.dead.len() as u64).into());
    summary.insert("backend_calls".to_string(), outcome.backend_calls.into());
    summary.insert("cache_hits".to_string(), outcome.cache_hits.into());
    summary.insert("error_rows".to_string(), (line_errors.len() as u64).into());

    let effective_config = serde_json::json!({
        "backend": spec,
        "direction": params.direction,
        "created_at": created_at.map(|t| t.to_rfc3339()),
    });

    Ok(CommandOutcome {
        inputs: vec![params.input.clone()],
        outputs,
        primary: params.out.clone(),
        effective_config,
        summary,
        data_errors: (line_errors.len() + outcome.dead.len()) as u64,
    })
}
