//! Translation gateway: turns a stream of variety documents into
//! parallel pairs through a pluggable backend, with an on-disk response
//! cache, retries with exponential backoff, global rate limiting, and a
//! dead-letter record for items that exhaust their retries. Also hosts
//! the variety-invariance audit.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{normalize_text, Document, ParallelPair};
use crate::error::{BackendError, ConfigError, TranslateError};
use crate::metrics::{bleu_corpus, BleuOptions, EvalPair};

/// Language pair for a translation request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Direction {
    pub source_lang: String,
    pub target_lang: String,
}

impl Direction {
    /// Parses `src:dst`, e.g. `pt-PT:en`.
    pub fn parse(arg: &str) -> Result<Direction, ConfigError> {
        match arg.split_once(':') {
            Some((src, dst)) if !src.is_empty() && !dst.is_empty() => Ok(Direction {
                source_lang: src.to_string(),
                target_lang: dst.to_string(),
            }),
            _ => Err(ConfigError::Invalid(format!(
                "direction must be '<source>:<target>', got '{arg}'"
            ))),
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.source_lang, self.target_lang)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    HttpService,
    MockIdentity,
    MockTable,
}

/// Declarative backend configuration, usually loaded from TOML.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackendSpec {
    pub backend_id: String,
    pub kind: BackendKind,
    /// HTTP endpoint; required for `http-service`.
    pub url: Option<String>,
    /// Header carrying the auth token, e.g. `Authorization`.
    pub auth_header: Option<String>,
    /// Environment variable holding the token value.
    pub auth_token_env: Option<String>,
    /// Lookup table path; required for `mock-table`.
    pub table_path: Option<PathBuf>,
    #[serde(default = "default_rate_limit")]
    pub rate_limit_rps: f64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_base_ms: u64,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

fn default_rate_limit() -> f64 {
    10.0
}
fn default_max_retries() -> u32 {
    3
}
fn default_backoff_ms() -> u64 {
    250
}
fn default_timeout_ms() -> u64 {
    30_000
}

impl BackendSpec {
    pub fn mock_identity() -> BackendSpec {
        BackendSpec {
            backend_id: "mock-identity".to_string(),
            kind: BackendKind::MockIdentity,
            url: None,
            auth_header: None,
            auth_token_env: None,
            table_path: None,
            rate_limit_rps: default_rate_limit(),
            max_retries: default_max_retries(),
            backoff_base_ms: default_backoff_ms(),
            timeout_ms: default_timeout_ms(),
        }
    }

    pub fn load(path: &Path) -> Result<BackendSpec, ConfigError> {
        let raw = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut spec: BackendSpec = toml::from_str(&raw).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if let Some(table) = &spec.table_path {
            if table.is_relative() {
                if let Some(dir) = path.parent() {
                    spec.table_path = Some(dir.join(table));
                }
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.rate_limit_rps > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "rate_limit_rps must be positive, got {}",
                self.rate_limit_rps
            )));
        }
        match self.kind {
            BackendKind::HttpService if self.url.is_none() => Err(ConfigError::Invalid(
                "http-service backend needs a url".to_string(),
            )),
            BackendKind::MockTable => match &self.table_path {
                None => Err(ConfigError::Invalid(
                    "mock-table backend needs a table_path".to_string(),
                )),
                Some(p) if !p.exists() => Err(ConfigError::MissingPath(p.clone())),
                Some(_) => Ok(()),
            },
            _ => Ok(()),
        }
    }
}

/// A translation backend; implementations must be shareable across the
/// gateway's worker threads.
pub trait TranslationBackend: Send + Sync {
    fn id(&self) -> &str;
    fn translate(&self, text: &str, direction: &Direction) -> Result<String, BackendError>;
}

/// Echoes the input text; useful for pipeline dry runs and determinism
/// tests.
pub struct IdentityBackend {
    id: String,
}

impl TranslationBackend for IdentityBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn translate(&self, text: &str, _direction: &Direction) -> Result<String, BackendError> {
        Ok(text.to_string())
    }
}

/// Fixed lookup table loaded from a JSON object file; texts missing from
/// the table are fatal failures (they end up dead-lettered).
pub struct TableBackend {
    id: String,
    table: HashMap<String, String>,
}

impl TableBackend {
    pub fn from_table(id: &str, table: HashMap<String, String>) -> TableBackend {
        TableBackend {
            id: id.to_string(),
            table,
        }
    }

    pub fn load(id: &str, path: &Path) -> Result<TableBackend, ConfigError> {
        let raw = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let table: HashMap<String, String> =
            serde_json::from_str(&raw).map_err(|e| ConfigError::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        Ok(TableBackend::from_table(id, table))
    }
}

impl TranslationBackend for TableBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn translate(&self, text: &str, _direction: &Direction) -> Result<String, BackendError> {
        self.table
            .get(text)
            .cloned()
            .ok_or_else(|| BackendError::Fatal("text not in translation table".to_string()))
    }
}

/// POSTs `{text, source_lang, target_lang}` and expects `{translation}`.
/// 429 and 5xx responses are retryable, other 4xx are fatal.
pub struct HttpBackend {
    id: String,
    url: String,
    auth: Option<(String, String)>,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn from_spec(spec: &BackendSpec) -> Result<HttpBackend, ConfigError> {
        let url = spec
            .url
            .clone()
            .ok_or_else(|| ConfigError::Invalid("http-service backend needs a url".to_string()))?;
        let auth = match (&spec.auth_header, &spec.auth_token_env) {
            (Some(header), Some(var)) => {
                let token = std::env::var(var).map_err(|_| {
                    ConfigError::Invalid(format!("auth token env var '{var}' is not set"))
                })?;
                Some((header.clone(), token))
            }
            (None, None) => None,
            _ => {
                return Err(ConfigError::Invalid(
                    "auth_header and auth_token_env must be set together".to_string(),
                ))
            }
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(spec.timeout_ms))
            .build()
            .map_err(|e| ConfigError::Invalid(format!("http client: {e}")))?;
        Ok(HttpBackend {
            id: spec.backend_id.clone(),
            url,
            auth,
            client,
        })
    }
}

#[derive(Serialize)]
struct TranslateRequest<'a> {
    text: &'a str,
    source_lang: &'a str,
    target_lang: &'a str,
}

#[derive(Deserialize)]
struct TranslateResponse {
    translation: String,
}

impl TranslationBackend for HttpBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn translate(&self, text: &str, direction: &Direction) -> Result<String, BackendError> {
        let mut request = self.client.post(&self.url).json(&TranslateRequest {
            text,
            source_lang: &direction.source_lang,
            target_lang: &direction.target_lang,
        });
        if let Some((header, token)) = &self.auth {
            request = request.header(header.as_str(), token.as_str());
        }
        let response = request
            .send()
            .map_err(|e| BackendError::Retryable(format!("request failed: {e}")))?;
        let status = response.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(BackendError::Retryable(format!("status {status}")));
        }
        if !status.is_success() {
            return Err(BackendError::Fatal(format!("status {status}")));
        }
        response
            .json::<TranslateResponse>()
            .map(|r| r.translation)
            .map_err(|e| BackendError::Fatal(format!("malformed response: {e}")))
    }
}

/// Builds the backend described by a spec.
pub fn build_backend(spec: &BackendSpec) -> Result<Box<dyn TranslationBackend>, TranslateError> {
    spec.validate()?;
    match spec.kind {
        BackendKind::MockIdentity => Ok(Box::new(IdentityBackend {
            id: spec.backend_id.clone(),
        })),
        BackendKind::MockTable => {
            let path = spec.table_path.as_ref().expect("validated above");
            Ok(Box::new(TableBackend::load(&spec.backend_id, path)?))
        }
        BackendKind::HttpService => Ok(Box::new(HttpBackend::from_spec(spec)?)),
    }
}

/// Global minimum-interval rate limiter shared by all workers.
pub struct RateLimiter {
    interval: Duration,
    next_slot: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn new(requests_per_sec: f64) -> RateLimiter {
        RateLimiter {
            interval: Duration::from_secs_f64(1.0 / requests_per_sec),
            next_slot: Mutex::new(None),
        }
    }

    /// Blocks until a request slot is available.
    pub fn acquire(&self) {
        let wait = {
            let mut slot = self.next_slot.lock().expect("rate limiter poisoned");
            let now = Instant::now();
            let at = match *slot {
                Some(next) if next > now => next,
                _ => now,
            };
            *slot = Some(at + self.interval);
            at.saturating_duration_since(now)
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

/// One cached backend response.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranslationCacheEntry {
    pub key: String,
    pub value: String,
    pub timestamp: DateTime<Utc>,
}

/// Content-addressed on-disk response cache. Entries are immutable once
/// written; writes are serialized and go through a temp-file rename.
pub struct TranslationCache {
    dir: PathBuf,
    write_lock: Mutex<()>,
}

impl TranslationCache {
    pub fn open(dir: &Path) -> Result<TranslationCache, TranslateError> {
        std::fs::create_dir_all(dir).map_err(|source| TranslateError::Cache {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(TranslationCache {
            dir: dir.to_path_buf(),
            write_lock: Mutex::new(()),
        })
    }

    /// Exact-match cache key over backend, direction, and normalized text.
    pub fn key_for(backend_id: &str, direction: &Direction, normalized_text: &str) -> String {
        let mut hasher = Sha256::new();
        hasher.update(backend_id.as_bytes());
        hasher.update(b"\n");
        hasher.update(direction.to_string().as_bytes());
        hasher.update(b"\n");
        hasher.update(normalized_text.as_bytes());
        hex_digest(hasher)
    }

    fn entry_path(&self, key: &str) -> PathBuf {
        self.dir.join(&key[..2]).join(format!("{}.json", &key[2..]))
    }

    pub fn get(&self, key: &str) -> Option<TranslationCacheEntry> {
        let raw = std::fs::read_to_string(self.entry_path(key)).ok()?;
        serde_json::from_str(&raw).ok()
    }

    pub fn put(&self, entry: &TranslationCacheEntry) -> Result<(), TranslateError> {
        let _guard = self.write_lock.lock().expect("cache lock poisoned");
        let path = self.entry_path(&entry.key);
        let parent = path.parent().expect("entry path has a parent");
        let io_err = |source| TranslateError::Cache {
            path: path.clone(),
            source,
        };
        std::fs::create_dir_all(parent).map_err(io_err)?;
        let tmp = path.with_extension("tmp");
        let json = serde_json::to_string(entry).expect("cache entry serializes");
        std::fs::write(&tmp, json).map_err(io_err)?;
        std::fs::rename(&tmp, &path).map_err(io_err)?;
        Ok(())
    }
}

fn hex_digest(hasher: Sha256) -> String {
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// A document that failed translation terminally, with the reason.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeadLetter {
    pub doc: Document,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct TranslateOptions {
    pub direction: Direction,
    pub workers: usize,
    /// Timestamp stamped on produced pairs. `None` takes each pair's
    /// timestamp from its cache entry (stable across warm re-runs);
    /// mock-backend CLI runs default to a fixed epoch so output is
    /// byte-identical regardless of cache state.
    pub created_at: Option<DateTime<Utc>>,
}

impl TranslateOptions {
    pub fn fixed_epoch() -> DateTime<Utc> {
        Utc.timestamp_opt(0, 0).unwrap()
    }
}

/// Batch translation outcome; `pairs.len() + dead.len()` always equals
/// the number of input documents.
#[derive(Debug)]
pub struct TranslateOutcome {
    pub pairs: Vec<ParallelPair>,
    pub dead: Vec<DeadLetter>,
    pub backend_calls: u64,
    pub cache_hits: u64,
}

/// Drives a backend over a document batch with caching, retries, rate
/// limiting, and order-preserving concurrency.
pub struct Gateway<'a> {
    backend: &'a dyn TranslationBackend,
    cache: Option<&'a TranslationCache>,
    limiter: RateLimiter,
    max_retries: u32,
    backoff_base: Duration,
}

impl<'a> Gateway<'a> {
    pub fn new(
        backend: &'a dyn TranslationBackend,
        cache: Option<&'a TranslationCache>,
        spec: &BackendSpec,
    ) -> Gateway<'a> {
        Gateway {
            backend,
            cache,
            limiter: RateLimiter::new(spec.rate_limit_rps),
            max_retries: spec.max_retries,
            backoff_base: Duration::from_millis(spec.backoff_base_ms),
        }
    }

    fn translate_one(
        &self,
        doc: &Document,
        options: &TranslateOptions,
        backend_calls: &AtomicU64,
        cache_hits: &AtomicU64,
    ) -> Result<ParallelPair, String> {
        let normalized = normalize_text(&doc.text);
        let key = TranslationCache::key_for(self.backend.id(), &options.direction, &normalized);

        let entry = match self.cache.and_then(|c| c.get(&key)) {
            Some(entry) => {
                cache_hits.fetch_add(1, Ordering::Relaxed);
                entry
            }
            None => {
                let translation = self.call_with_retries(&normalized, &options.direction)?;
                let entry = TranslationCacheEntry {
                    key: key.clone(),
                    value: translation,
                    timestamp: options.created_at.unwrap_or_else(Utc::now),
                };
                backend_calls.fetch_add(1, Ordering::Relaxed);
                if let Some(cache) = self.cache {
                    cache.put(&entry).map_err(|e| e.to_string())?;
                }
                entry
            }
        };

        Ok(ParallelPair {
            id: doc.id.clone(),
            source_text: entry.value,
            target_text: doc.text.clone(),
            domain: doc.domain,
            backend_id: self.backend.id().to_string(),
            created_at: options.created_at.unwrap_or(entry.timestamp),
        })
    }

    fn call_with_retries(&self, text: &str, direction: &Direction) -> Result<String, String> {
        let mut attempt = 0u32;
        loop {
            self.limiter.acquire();
            match self.backend.translate(text, direction) {
                Ok(translation) => return Ok(translation),
                Err(BackendError::Fatal(reason)) => return Err(reason),
                Err(BackendError::Retryable(reason)) => {
                    if attempt >= self.max_retries {
                        return Err(format!(
                            "exhausted {} retries, last error: {reason}",
                            self.max_retries
                        ));
                    }
                    let backoff = self.backoff_base * 2u32.saturating_pow(attempt);
                    log::warn!("retryable backend error (attempt {attempt}): {reason}");
                    std::thread::sleep(backoff);
                    attempt += 1;
                }
            }
        }
    }

    /// Translates a batch. Output pairs are in input order regardless of
    /// worker count; failed documents are returned as dead letters, never
    /// dropped.
    pub fn translate_batch(
        &self,
        docs: Vec<Document>,
        options: &TranslateOptions,
    ) -> TranslateOutcome {
        let backend_calls = AtomicU64::new(0);
        let cache_hits = AtomicU64::new(0);
        let total = docs.len();
        let mut slots: Vec<Option<Result<ParallelPair, DeadLetter>>> = Vec::with_capacity(total);
        slots.resize_with(total, || None);

        if options.workers <= 1 {
            for (slot, doc) in slots.iter_mut().zip(docs) {
                *slot = Some(self.process(doc, options, &backend_calls, &cache_hits));
            }
        } else {
            let queue = Mutex::new(docs.into_iter().enumerate().collect::<Vec<_>>());
            let results = Mutex::new(&mut slots);
            std::thread::scope(|scope| {
                for _ in 0..options.workers.min(total.max(1)) {
                    scope.spawn(|| loop {
                        let job = queue.lock().expect("queue poisoned").pop();
                        let Some((index, doc)) = job else { break };
                        let outcome = self.process(doc, options, &backend_calls, &cache_hits);
                        results.lock().expect("results poisoned")[index] = Some(outcome);
                    });
                }
            });
        }

        let mut pairs = Vec::new();
        let mut dead = Vec::new();
        for slot in slots {
            match slot.expect("every slot is filled") {
                Ok(pair) => pairs.push(pair),
                Err(letter) => dead.push(letter),
            }
        }
        TranslateOutcome {
            pairs,
            dead,
            backend_calls: backend_calls.load(Ordering::Relaxed),
            cache_hits: cache_hits.load(Ordering::Relaxed),
        }
    }

    fn process(
        &self,
        doc: Document,
        options: &TranslateOptions,
        backend_calls: &AtomicU64,
        cache_hits: &AtomicU64,
    ) -> Result<ParallelPair, DeadLetter> {
        match self.translate_one(&doc, options, backend_calls, cache_hits) {
            Ok(pair) => Ok(pair),
            Err(error) => Err(DeadLetter { doc, error }),
        }
    }
}

/// Result of comparing the translations produced from two aligned
/// corpora.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub n: u64,
    pub exact_match_rate: f64,
    pub bleu: f64,
}

/// Measures how invariant the backend's output is across two variants of
/// the same underlying content: exact-match rate over normalized source
/// texts, plus corpus BLEU with `pairs_a` sources as hypotheses and
/// `pairs_b` sources as references.
pub fn variety_invariance_audit(
    pairs_a: &[ParallelPair],
    pairs_b: &[ParallelPair],
) -> Result<AuditReport, TranslateError> {
    if pairs_a.len() != pairs_b.len() {
        return Err(TranslateError::LengthMismatch {
            left: pairs_a.len(),
            right: pairs_b.len(),
        });
    }
    for (a, b) in pairs_a.iter().zip(pairs_b) {
        if a.id != b.id {
            return Err(TranslateError::Misaligned(a.id.clone()));
        }
    }

    let mut eval_pairs = Vec::with_capacity(pairs_a.len());
    let mut matches = 0u64;
    for (a, b) in pairs_a.iter().zip(pairs_b) {
        let hyp = normalize_text(&a.source_text);
        let reference = normalize_text(&b.source_text);
        if hyp == reference {
            matches += 1;
        }
        eval_pairs.push(EvalPair::new(&hyp, [&reference])?);
    }
    let bleu = bleu_corpus(&eval_pairs, BleuOptions::default())?;
    Ok(AuditReport {
        n: pairs_a.len() as u64,
        exact_match_rate: matches as f64 / pairs_a.len() as f64,
        bleu: bleu.value,
    })
}
