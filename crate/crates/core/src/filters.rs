//! The quality-filtering funnel: boilerplate block classification,
//! exact duplicate removal, invalid-character screening, pattern
//! blocklisting, combined-token-length capping, and bracket/quote
//! balance checks, with exact per-stage accounting.
//!
//! Stage order is fixed: boilerplate -> duplicates -> invalid-chars ->
//! patterns -> length -> misc. The length stage needs parallel pairs and
//! a tokenizer; document streams skip it. Every stage except duplicates
//! is a pure function of the item, so the pipeline parallelizes those
//! while keeping output identical to sequential execution.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{normalize_text, Document, ParallelPair};
use crate::error::{ConfigError, FilterError};
use crate::tokenize::Tokenizer;

const DEFAULT_STOPWORDS: &str = include_str!("data/stopwords_pt.txt");

/// Stopword lookup used for block density; matching is lowercase-exact
/// on whitespace tokens.
#[derive(Debug, Clone)]
pub struct StopwordSet {
    words: HashSet<String>,
}

impl StopwordSet {
    /// The bundled target-variety list.
    pub fn default_target_variety() -> StopwordSet {
        StopwordSet::from_lines(DEFAULT_STOPWORDS)
    }

    pub fn from_lines(lines: &str) -> StopwordSet {
        StopwordSet {
            words: lines
                .lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty())
                .collect(),
        }
    }

    pub fn from_path(path: &Path) -> Result<StopwordSet, ConfigError> {
        let raw = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(StopwordSet::from_lines(&raw))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Classification of one textual block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockClass {
    Good,
    NearGood,
    Short,
    Bad,
}

/// One blank-line-delimited block of a document.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub text: String,
    pub word_count: usize,
    pub stopword_density: f64,
    pub class: Option<BlockClass>,
}

/// Block classifier thresholds; the defaults are tuned for
/// single-language prose with a function-word stopword list.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct BoilerplateThresholds {
    pub length_low: usize,
    pub length_high: usize,
    pub density_low: f64,
    pub density_high: f64,
    pub keep_fraction: f64,
}

impl Default for BoilerplateThresholds {
    fn default() -> Self {
        BoilerplateThresholds {
            length_low: 15,
            length_high: 70,
            density_low: 0.25,
            density_high: 0.32,
            keep_fraction: 0.5,
        }
    }
}

impl BoilerplateThresholds {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.length_low > self.length_high {
            return Err(ConfigError::Invalid(format!(
                "length_low {} > length_high {}",
                self.length_low, self.length_high
            )));
        }
        if self.density_low > self.density_high {
            return Err(ConfigError::Invalid(format!(
                "density_low {} > density_high {}",
                self.density_low, self.density_high
            )));
        }
        if !(0.0..=1.0).contains(&self.keep_fraction) {
            return Err(ConfigError::Invalid(format!(
                "keep_fraction {} outside [0, 1]",
                self.keep_fraction
            )));
        }
        Ok(())
    }
}

/// Splits normalized text on blank lines and annotates each block with
/// its word count and stopword density.
pub fn segment_blocks(text: &str, stopwords: &StopwordSet) -> Vec<Block> {
    let mut blocks = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in text.lines().chain(std::iter::once("")) {
        if line.trim().is_empty() {
            if !current.is_empty() {
                blocks.push(build_block(&current.join("\n"), stopwords));
                current.clear();
            }
        } else {
            current.push(line);
        }
    }
    blocks
}

fn build_block(text: &str, stopwords: &StopwordSet) -> Block {
    let words: Vec<&str> = text.split_whitespace().collect();
    let stop = words.iter().filter(|w| stopwords.contains(w)).count();
    let density = if words.is_empty() {
        0.0
    } else {
        stop as f64 / words.len() as f64
    };
    Block {
        text: text.to_string(),
        word_count: words.len(),
        stopword_density: density,
        class: None,
    }
}

/// Length/density classification of a single block.
pub fn classify_block(
    block: &Block,
    thresholds: &BoilerplateThresholds,
) -> Result<BlockClass, ConfigError> {
    thresholds.validate()?;
    Ok(classify_block_unchecked(block, thresholds))
}

fn classify_block_unchecked(block: &Block, t: &BoilerplateThresholds) -> BlockClass {
    if block.word_count < t.length_low {
        BlockClass::Short
    } else if block.stopword_density >= t.density_high {
        if block.word_count >= t.length_high {
            BlockClass::Good
        } else {
            BlockClass::NearGood
        }
    } else if block.stopword_density >= t.density_low {
        BlockClass::NearGood
    } else {
        BlockClass::Bad
    }
}

/// The funnel stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Boilerplate,
    Duplicates,
    InvalidChars,
    Patterns,
    Length,
    Misc,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Boilerplate => "boilerplate",
            Stage::Duplicates => "duplicates",
            Stage::InvalidChars => "invalid-chars",
            Stage::Patterns => "patterns",
            Stage::Length => "length",
            Stage::Misc => "misc",
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Keep/drop decision of one stage for one item. Stages after a drop are
/// never evaluated, so each item has verdicts for a prefix of the stage
/// order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub doc_id: String,
    pub stage: Stage,
    pub kept: bool,
    pub reason: String,
}

impl FilterVerdict {
    fn kept(doc_id: &str, stage: Stage) -> FilterVerdict {
        FilterVerdict {
            doc_id: doc_id.to_string(),
            stage,
            kept: true,
            reason: "ok".to_string(),
        }
    }

    fn dropped(doc_id: &str, stage: Stage, reason: String) -> FilterVerdict {
        FilterVerdict {
            doc_id: doc_id.to_string(),
            stage,
            kept: false,
            reason,
        }
    }
}

/// Documents remaining after each executed stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunnelStage {
    pub name: String,
    pub remaining: u64,
    pub dropped: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunnelReport {
    pub initial: u64,
    pub stages: Vec<FunnelStage>,
}

impl FunnelReport {
    pub fn final_count(&self) -> u64 {
        self.stages.last().map_or(self.initial, |s| s.remaining)
    }

    pub fn total_dropped(&self) -> u64 {
        self.stages.iter().map(|s| s.dropped).sum()
    }
}

// ---------------------------------------------------------------------
// Boilerplate
// ---------------------------------------------------------------------

/// Block-level boilerplate decision: blocks are classified, short and
/// near-good blocks adopt the class of an adjacent good block (bad
/// otherwise), and the document is kept when the fraction of words in
/// good blocks reaches `keep_fraction`.
pub fn boilerplate_filter(
    doc: &Document,
    thresholds: &BoilerplateThresholds,
    stopwords: &StopwordSet,
) -> Result<FilterVerdict, ConfigError> {
    thresholds.validate()?;
    Ok(boilerplate_verdict(&doc.id, &doc.text, thresholds, stopwords))
}

fn boilerplate_verdict(
    id: &str,
    text: &str,
    t: &BoilerplateThresholds,
    stopwords: &StopwordSet,
) -> FilterVerdict {
    let mut blocks = segment_blocks(text, stopwords);
    let initial: Vec<BlockClass> = blocks
        .iter()
        .map(|b| classify_block_unchecked(b, t))
        .collect();

    let final_classes: Vec<BlockClass> = initial
        .iter()
        .enumerate()
        .map(|(i, &class)| match class {
            BlockClass::Good | BlockClass::Bad => class,
            BlockClass::Short | BlockClass::NearGood => {
                let prev_good = i > 0 && initial[i - 1] == BlockClass::Good;
                let next_good = i + 1 < initial.len() && initial[i + 1] == BlockClass::Good;
                if prev_good || next_good {
                    BlockClass::Good
                } else {
                    BlockClass::Bad
                }
            }
        })
        .collect();
    for (block, class) in blocks.iter_mut().zip(&final_classes) {
        block.class = Some(*class);
    }

    let total_words: usize = blocks.iter().map(|b| b.word_count).sum();
    let good_words: usize = blocks
        .iter()
        .filter(|b| b.class == Some(BlockClass::Good))
        .map(|b| b.word_count)
        .sum();
    let fraction = if total_words == 0 {
        0.0
    } else {
        good_words as f64 / total_words as f64
    };
    if fraction >= t.keep_fraction {
        FilterVerdict::kept(id, Stage::Boilerplate)
    } else {
        FilterVerdict::dropped(
            id,
            Stage::Boilerplate,
            format!("good-word fraction {fraction:.3} below {}", t.keep_fraction),
        )
    }
}

// ---------------------------------------------------------------------
// Duplicates
// ---------------------------------------------------------------------

/// Streaming exact-duplicate tracker keyed on the normalized variety
/// text. First occurrence in input order wins.
#[derive(Debug, Default)]
pub struct DedupState {
    seen: HashMap<[u8; 32], String>,
}

impl DedupState {
    pub fn new() -> DedupState {
        DedupState::default()
    }

    fn check(&mut self, id: &str, text: &str) -> FilterVerdict {
        let digest: [u8; 32] = Sha256::digest(normalize_text(text).as_bytes()).into();
        match self.seen.get(&digest) {
            Some(first) => {
                FilterVerdict::dropped(id, Stage::Duplicates, format!("duplicate of {first}"))
            }
            None => {
                self.seen.insert(digest, id.to_string());
                FilterVerdict::kept(id, Stage::Duplicates)
            }
        }
    }
}

/// Convenience wrapper over `DedupState` for whole-vector inputs.
pub fn dedup_filter(docs: Vec<Document>) -> (Vec<Document>, Vec<FilterVerdict>) {
    let mut state = DedupState::new();
    let mut kept = Vec::new();
    let mut verdicts = Vec::new();
    for doc in docs {
        let verdict = state.check(&doc.id, &doc.text);
        let keep = verdict.kept;
        verdicts.push(verdict);
        if keep {
            kept.push(doc);
        }
    }
    (kept, verdicts)
}

// ---------------------------------------------------------------------
// Invalid characters
// ---------------------------------------------------------------------

/// Letters the target variety actually uses; everything else in the
/// Unicode letter category is grounds for dropping.
const TARGET_LETTERS: &str = "áàâãéêíóôõúçÁÀÂÃÉÊÍÓÔÕÚÇ";

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CharsetPolicy {
    /// Additional letter characters to allow on top of basic Latin and
    /// the built-in target-variety diacritics.
    pub extra_letters: String,
    /// When set, non-ASCII characters that are not letters (emoji,
    /// decorative symbols) also cause a drop. Off by default.
    pub reject_non_letter_symbols: bool,
}

impl CharsetPolicy {
    fn letter_allowed(&self, c: char) -> bool {
        c.is_ascii_alphabetic() || TARGET_LETTERS.contains(c) || self.extra_letters.contains(c)
    }
}

/// Drops a document containing any letter outside the allowlist.
pub fn charset_filter(doc: &Document, policy: &CharsetPolicy) -> FilterVerdict {
    charset_verdict(&doc.id, &doc.text, policy)
}

fn charset_verdict(id: &str, text: &str, policy: &CharsetPolicy) -> FilterVerdict {
    for c in text.chars() {
        if c.is_alphabetic() && !policy.letter_allowed(c) {
            return FilterVerdict::dropped(
                id,
                Stage::InvalidChars,
                format!("disallowed letter '{c}'"),
            );
        }
        if policy.reject_non_letter_symbols && !c.is_alphabetic() && !c.is_whitespace() && !c.is_ascii()
        {
            return FilterVerdict::dropped(
                id,
                Stage::InvalidChars,
                format!("disallowed symbol '{c}'"),
            );
        }
    }
    FilterVerdict::kept(id, Stage::InvalidChars)
}

// ---------------------------------------------------------------------
// Patterns
// ---------------------------------------------------------------------

/// Literal prefixes and compiled regexes describing over-represented
/// template text.
#[derive(Debug, Clone)]
pub struct PatternBlocklist {
    pub prefixes: Vec<String>,
    pub regexes: Vec<regex::Regex>,
}

impl PatternBlocklist {
    /// The stock blocklist: scraping artifacts seen across web corpora.
    pub fn default_blocklist() -> PatternBlocklist {
        PatternBlocklist {
            prefixes: vec![
                "Lista de alterações recentes".to_string(),
                "Filtrar por".to_string(),
            ],
            regexes: Vec::new(),
        }
    }

    pub fn compile(prefixes: Vec<String>, patterns: &[String]) -> Result<PatternBlocklist, ConfigError> {
        let mut regexes = Vec::with_capacity(patterns.len());
        for pattern in patterns {
            let compiled = regex::Regex::new(pattern)
                .map_err(|e| ConfigError::Invalid(format!("malformed regex '{pattern}': {e}")))?;
            regexes.push(compiled);
        }
        Ok(PatternBlocklist { prefixes, regexes })
    }
}

/// Drops a document that starts with a blocked prefix or matches a
/// blocked pattern.
pub fn pattern_filter(doc: &Document, blocklist: &PatternBlocklist) -> FilterVerdict {
    pattern_verdict(&doc.id, &doc.text, blocklist)
}

fn pattern_verdict(id: &str, text: &str, blocklist: &PatternBlocklist) -> FilterVerdict {
    for prefix in &blocklist.prefixes {
        if text.starts_with(prefix.as_str()) {
            return FilterVerdict::dropped(id, Stage::Patterns, format!("prefix: {prefix}"));
        }
    }
    for re in &blocklist.regexes {
        if re.is_match(text) {
            return FilterVerdict::dropped(id, Stage::Patterns, format!("pattern: {}", re.as_str()));
        }
    }
    FilterVerdict::kept(id, Stage::Patterns)
}

// ---------------------------------------------------------------------
// Length
// ---------------------------------------------------------------------

/// Drops a pair whose combined source and target token count exceeds
/// `max_total`. Token counting failures are hard errors: a silently
/// wrong count would corrupt the funnel.
pub fn length_filter(
    pair: &ParallelPair,
    tokenizer: &Tokenizer,
    max_total: u64,
) -> Result<FilterVerdict, FilterError> {
    let count = |text: &str| {
        tokenizer.count_tokens(text).map_err(|source| FilterError::Tokenize {
            doc_id: pair.id.clone(),
            source,
        })
    };
    let total = count(&pair.source_text)? + count(&pair.target_text)?;
    if total > max_total {
        Ok(FilterVerdict::dropped(
            &pair.id,
            Stage::Length,
            format!("{total} tokens > {max_total}"),
        ))
    } else {
        Ok(FilterVerdict::kept(&pair.id, Stage::Length))
    }
}

// ---------------------------------------------------------------------
// Misc checks
// ---------------------------------------------------------------------

/// Bracket and quotation-mark balance: paired delimiters must match in
/// count, straight double quotes must come in an even number.
pub fn misc_filter(doc: &Document) -> FilterVerdict {
    match unbalanced_reason(&doc.text) {
        Some(reason) => FilterVerdict::dropped(&doc.id, Stage::Misc, reason),
        None => FilterVerdict::kept(&doc.id, Stage::Misc),
    }
}

fn unbalanced_reason(text: &str) -> Option<String> {
    let count = |c: char| text.chars().filter(|&x| x == c).count();
    for (open, close) in [('(', ')'), ('[', ']'), ('{', '}'), ('«', '»'), ('“', '”')] {
        let (n_open, n_close) = (count(open), count(close));
        if n_open != n_close {
            return Some(format!("unbalanced {open}{close}: {n_open} vs {n_close}"));
        }
    }
    let quotes = count('"');
    if quotes % 2 != 0 {
        return Some(format!("odd straight-quote count {quotes}"));
    }
    None
}

fn misc_verdict_pair(pair: &ParallelPair) -> FilterVerdict {
    if let Some(reason) = unbalanced_reason(&pair.target_text) {
        return FilterVerdict::dropped(&pair.id, Stage::Misc, format!("target: {reason}"));
    }
    if let Some(reason) = unbalanced_reason(&pair.source_text) {
        return FilterVerdict::dropped(&pair.id, Stage::Misc, format!("source: {reason}"));
    }
    FilterVerdict::kept(&pair.id, Stage::Misc)
}

// ---------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------

/// Either side of the translation step can flow through the funnel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PipelineItem {
    Pair(ParallelPair),
    Doc(Document),
}

impl PipelineItem {
    pub fn id(&self) -> &str {
        match self {
            PipelineItem::Doc(d) => &d.id,
            PipelineItem::Pair(p) => &p.id,
        }
    }

    /// The variety-side text every single-document stage inspects.
    pub fn variety_text(&self) -> &str {
        match self {
            PipelineItem::Doc(d) => &d.text,
            PipelineItem::Pair(p) => &p.target_text,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct StageToggles {
    pub boilerplate: bool,
    pub duplicates: bool,
    pub invalid_chars: bool,
    pub patterns: bool,
    pub length: bool,
    pub misc: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        StageToggles {
            boilerplate: true,
            duplicates: true,
            invalid_chars: true,
            patterns: true,
            length: true,
            misc: true,
        }
    }
}

/// Fully resolved filter configuration (paths read, regexes compiled).
#[derive(Debug, Clone)]
pub struct FilterSettings {
    pub toggles: StageToggles,
    pub boilerplate: BoilerplateThresholds,
    pub stopwords: StopwordSet,
    pub charset: CharsetPolicy,
    pub blocklist: PatternBlocklist,
    pub max_total_tokens: u64,
}

impl Default for FilterSettings {
    fn default() -> Self {
        FilterSettings {
            toggles: StageToggles::default(),
            boilerplate: BoilerplateThresholds::default(),
            stopwords: StopwordSet::default_target_variety(),
            charset: CharsetPolicy::default(),
            blocklist: PatternBlocklist::default_blocklist(),
            max_total_tokens: 900,
        }
    }
}

impl FilterSettings {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.boilerplate.validate()?;
        if self.max_total_tokens == 0 {
            return Err(ConfigError::Invalid(
                "max_total_tokens must be positive".to_string(),
            ));
        }
        Ok(())
    }
}

/// Outcome of running the funnel over a batch.
#[derive(Debug)]
pub struct PipelineOutcome {
    pub kept: Vec<PipelineItem>,
    pub report: FunnelReport,
    pub verdicts: Vec<FilterVerdict>,
}

struct StagePlan {
    stages: Vec<Stage>,
}

impl StagePlan {
    fn build(settings: &FilterSettings, pairs_present: bool) -> StagePlan {
        let t = &settings.toggles;
        let mut stages = Vec::new();
        if t.boilerplate {
            stages.push(Stage::Boilerplate);
        }
        if t.duplicates {
            stages.push(Stage::Duplicates);
        }
        if t.invalid_chars {
            stages.push(Stage::InvalidChars);
        }
        if t.patterns {
            stages.push(Stage::Patterns);
        }
        if t.length && pairs_present {
            stages.push(Stage::Length);
        }
        if t.misc {
            stages.push(Stage::Misc);
        }
        StagePlan { stages }
    }
}

fn pure_stage_verdict(
    item: &PipelineItem,
    stage: Stage,
    settings: &FilterSettings,
    tokenizer: Option<&Tokenizer>,
) -> Result<FilterVerdict, FilterError> {
    let id = item.id();
    let text = item.variety_text();
    match stage {
        Stage::Boilerplate => Ok(boilerplate_verdict(
            id,
            text,
            &settings.boilerplate,
            &settings.stopwords,
        )),
        Stage::InvalidChars => Ok(charset_verdict(id, text, &settings.charset)),
        Stage::Patterns => Ok(pattern_verdict(id, text, &settings.blocklist)),
        Stage::Misc => Ok(match item {
            PipelineItem::Doc(_) => match unbalanced_reason(text) {
                Some(reason) => FilterVerdict::dropped(id, Stage::Misc, reason),
                None => FilterVerdict::kept(id, Stage::Misc),
            },
            PipelineItem::Pair(pair) => misc_verdict_pair(pair),
        }),
        Stage::Length => match item {
            PipelineItem::Pair(pair) => {
                let tok = tokenizer.ok_or_else(|| {
                    FilterError::Config(ConfigError::Invalid(
                        "length stage requires a tokenizer".to_string(),
                    ))
                })?;
                length_filter(pair, tok, settings.max_total_tokens)
            }
            // Documents cannot be length-checked; the plan only includes
            // this stage for pair streams.
            PipelineItem::Doc(_) => Ok(FilterVerdict::kept(id, Stage::Length)),
        },
        Stage::Duplicates => unreachable!("duplicates is not a pure stage"),
    }
}

/// Runs the funnel sequentially. The parallel variant produces identical
/// output; this one is the reference.
pub fn run_pipeline(
    items: Vec<PipelineItem>,
    settings: &FilterSettings,
    tokenizer: Option<&Tokenizer>,
) -> Result<PipelineOutcome, FilterError> {
    settings.validate()?;
    let pairs_present = items.iter().any(|i| matches!(i, PipelineItem::Pair(_)));
    let plan = StagePlan::build(settings, pairs_present);
    let initial = items.len() as u64;

    let mut dedup = DedupState::new();
    let mut verdicts = Vec::new();
    let mut dropped_at: HashMap<Stage, u64> = HashMap::new();
    let mut kept = Vec::new();

    'items: for item in items {
        for &stage in &plan.stages {
            let verdict = match stage {
                Stage::Duplicates => dedup.check(item.id(), item.variety_text()),
                _ => pure_stage_verdict(&item, stage, settings, tokenizer)?,
            };
            let keep = verdict.kept;
            verdicts.push(verdict);
            if !keep {
                *dropped_at.entry(stage).or_insert(0) += 1;
                continue 'items;
            }
        }
        kept.push(item);
    }

    let report = build_report(initial, &plan, &dropped_at);
    Ok(PipelineOutcome {
        kept,
        report,
        verdicts,
    })
}

/// Runs the funnel with the pure stages evaluated in parallel. Output is
/// byte-identical to `run_pipeline` for the same input.
pub fn run_pipeline_parallel(
    items: Vec<PipelineItem>,
    settings: &FilterSettings,
    tokenizer: Option<&Tokenizer>,
    workers: usize,
) -> Result<PipelineOutcome, FilterError> {
    if workers <= 1 {
        return run_pipeline(items, settings, tokenizer);
    }
    settings.validate()?;
    let pairs_present = items.iter().any(|i| matches!(i, PipelineItem::Pair(_)));
    let plan = StagePlan::build(settings, pairs_present);
    let initial = items.len() as u64;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| FilterError::Config(ConfigError::Invalid(e.to_string())))?;

    // Pure verdicts for every item and stage, in parallel; the dedup
    // decision is woven in sequentially afterwards so first-in-input-order
    // still wins.
    let precomputed: Result<Vec<Vec<(Stage, FilterVerdict)>>, FilterError> = pool.install(|| {
        use rayon::prelude::*;
        items
            .par_iter()
            .map(|item| {
                plan.stages
                    .iter()
                    .filter(|s| !matches!(s, Stage::Duplicates))
                    .map(|&stage| {
                        pure_stage_verdict(item, stage, settings, tokenizer).map(|v| (stage, v))
                    })
                    .collect()
            })
            .collect()
    });
    let precomputed = precomputed?;

    let mut dedup = DedupState::new();
    let mut verdicts = Vec::new();
    let mut dropped_at: HashMap<Stage, u64> = HashMap::new();
    let mut kept = Vec::new();

    'items: for (item, pure) in items.into_iter().zip(precomputed) {
        let mut pure_iter = pure.into_iter();
        for &stage in &plan.stages {
            let verdict = match stage {
                Stage::Duplicates => dedup.check(item.id(), item.variety_text()),
                _ => {
                    let (expected, verdict) = pure_iter.next().expect("stage plan mismatch");
                    debug_assert_eq!(expected, stage);
                    verdict
                }
            };
            let keep = verdict.kept;
            verdicts.push(verdict);
            if !keep {
                *dropped_at.entry(stage).or_insert(0) += 1;
                continue 'items;
            }
        }
        kept.push(item);
    }

    let report = build_report(initial, &plan, &dropped_at);
    Ok(PipelineOutcome {
        kept,
        report,
        verdicts,
    })
}

fn build_report(initial: u64, plan: &StagePlan, dropped_at: &HashMap<Stage, u64>) -> FunnelReport {
    let mut remaining = initial;
    let mut stages = Vec::with_capacity(plan.stages.len());
    for &stage in &plan.stages {
        let dropped = dropped_at.get(&stage).copied().unwrap_or(0);
        remaining -= dropped;
        stages.push(FunnelStage {
            name: stage.as_str().to_string(),
            remaining,
            dropped,
        });
    }
    FunnelReport { initial, stages }
}
