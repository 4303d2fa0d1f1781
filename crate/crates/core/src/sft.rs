//! Serialization of the filtered parallel corpus into instruction-tuning
//! records: neutral `{system, user, assistant}` triples, one JSON object
//! per line. Model-specific chat wrappers are left to the training
//! framework.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::ParallelPair;
use crate::error::SftError;
use crate::jsonl::JsonlWriter;
use crate::tokenize::Tokenizer;

/// The placeholder the user template must contain exactly once.
pub const PLACEHOLDER: &str = "{text}";

/// Default instruction strings for the stock English-to-European-
/// Portuguese setup.
pub const DEFAULT_SYSTEM_MESSAGE: &str = "You are a translator from English to European Portuguese";
pub const DEFAULT_USER_TEMPLATE: &str =
    "Translate this text from English to European Portuguese: {text}";

/// Prompt template rendered around each pair's source text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptTemplate {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_message: Option<String>,
    pub user_template: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate {
            system_message: Some(DEFAULT_SYSTEM_MESSAGE.to_string()),
            user_template: DEFAULT_USER_TEMPLATE.to_string(),
        }
    }
}

impl PromptTemplate {
    pub fn load(path: &Path) -> Result<PromptTemplate, SftError> {
        let raw = std::fs::read_to_string(path).map_err(|source| SftError::Write {
            path: path.to_path_buf(),
            source,
        })?;
        let template: PromptTemplate =
            toml::from_str(&raw).map_err(|_| SftError::TemplateMismatch)?;
        template.validate()?;
        Ok(template)
    }

    pub fn validate(&self) -> Result<(), SftError> {
        let found = self.user_template.matches(PLACEHOLDER).count();
        if found != 1 {
            return Err(SftError::BadPlaceholder {
                placeholder: PLACEHOLDER,
                found,
            });
        }
        Ok(())
    }

    fn prefix_suffix(&self) -> (&str, &str) {
        let at = self
            .user_template
            .find(PLACEHOLDER)
            .expect("validated template");
        (
            &self.user_template[..at],
            &self.user_template[at + PLACEHOLDER.len()..],
        )
    }
}

/// One instruction-tuning record. `system` is omitted from the JSON when
/// the template has no system message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SftRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    pub user: String,
    pub assistant: String,
}

/// Renders a pair into a record: the placeholder is replaced by the
/// source text, the assistant turn is the target text verbatim.
pub fn render_record(pair: &ParallelPair, template: &PromptTemplate) -> Result<SftRecord, SftError> {
    template.validate()?;
    Ok(SftRecord {
        system: template.system_message.clone(),
        user: template.user_template.replacen(PLACEHOLDER, &pair.source_text, 1),
        assistant: pair.target_text.clone(),
    })
}

/// Inverts `render_record`: recovers `(source_text, target_text)` from a
/// record, byte-identically.
pub fn parse_record(
    record: &SftRecord,
    template: &PromptTemplate,
) -> Result<(String, String), SftError> {
    template.validate()?;
    let (prefix, suffix) = template.prefix_suffix();
    let source = record
        .user
        .strip_prefix(prefix)
        .and_then(|rest| rest.strip_suffix(suffix))
        .ok_or(SftError::TemplateMismatch)?;
    Ok((source.to_string(), record.assistant.clone()))
}

/// A pair skipped by the export for exceeding the token budget.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkippedRecord {
    pub id: String,
    pub tokens: u64,
    pub max_tokens: u64,
}

/// Export accounting; `written + skipped.len()` equals the input size.
#[derive(Debug)]
pub struct ExportSummary {
    pub written: u64,
    pub skipped: Vec<SkippedRecord>,
}

/// Writes rendered records whose total token count (system + user +
/// assistant, raw text tokens) fits `max_tokens`; the rest are reported
/// as skipped. Input order is preserved.
pub fn export_corpus(
    pairs: &[ParallelPair],
    template: &PromptTemplate,
    tokenizer: &Tokenizer,
    max_tokens: u64,
    out_path: &Path,
) -> Result<ExportSummary, SftError> {
    template.validate()?;
    let mut writer = JsonlWriter::create(out_path).map_err(|e| SftError::Write {
        path: out_path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    })?;
    let mut skipped = Vec::new();
    for pair in pairs {
        let record = render_record(pair, template)?;
        let mut tokens = tokenizer.count_tokens(&record.user)? + tokenizer.count_tokens(&record.assistant)?;
        if let Some(system) = &record.system {
            tokens += tokenizer.count_tokens(system)?;
        }
        if tokens > max_tokens {
            skipped.push(SkippedRecord {
                id: pair.id.clone(),
                tokens,
                max_tokens,
            });
            continue;
        }
        writer.write(&record).map_err(|e| SftError::Write {
            path: out_path.to_path_buf(),
            source: std::io::Error::other(e.to_string()),
        })?;
    }
    let written = writer.finish().map_err(|e| SftError::Write {
        path: out_path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    })?;
    Ok(ExportSummary { written, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DomainTag;
    use chrono::TimeZone;

    fn pair(source: &str, target: &str) -> ParallelPair {
        ParallelPair {
            id: "p1".to_string(),
            source_text: source.to_string(),
            target_text: target.to_string(),
            domain: DomainTag::Web,
            backend_id: "mock".to_string(),
            created_at: chrono::Utc.timestamp_opt(0, 0).unwrap(),
        }
    }

    #[test]
    fn default_template_renders_the_stock_prompt() {
        let record = render_record(&pair("hello", "olá"), &PromptTemplate::default()).unwrap();
        assert_eq!(
            record.system.as_deref(),
            Some("You are a translator from English to European Portuguese")
        );
        assert_eq!(
            record.user,
            "Translate this text from English to European Portuguese: hello"
        );
        assert_eq!(record.assistant, "olá");
    }

    #[test]
    fn template_without_system_message_omits_the_field() {
        let template = PromptTemplate {
            system_message: None,
            user_template: "traduz: {text}".to_string(),
        };
        let record = render_record(&pair("hi", "oi"), &template).unwrap();
        assert!(record.system.is_none());
        let json = serde_json::to_string(&record).unwrap();
        assert!(!json.contains("system"));
    }

    #[test]
    fn doubled_placeholder_is_an_error() {
        let template = PromptTemplate {
            system_message: None,
            user_template: "{text} and {text}".to_string(),
        };
        assert!(matches!(
            render_record(&pair("a", "b"), &template),
            Err(SftError::BadPlaceholder { found: 2, .. })
        ));
        let template = PromptTemplate {
            system_message: None,
            user_template: "no placeholder".to_string(),
        };
        assert!(template.validate().is_err());
    }

    #[test]
    fn records_round_trip_byte_identically() {
        let template = PromptTemplate::default();
        let original = pair("a tricky {text} inside", "alvo com\nnova linha");
        let record = render_record(&original, &template).unwrap();
        let (source, target) = parse_record(&record, &template).unwrap();
        assert_eq!(source, original.source_text);
        assert_eq!(target, original.target_text);
    }

    #[test]
    fn export_skips_over_budget_records() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("sft.jsonl");
        let template = PromptTemplate {
            system_message: None,
            user_template: "{text}".to_string(),
        };
        let long_source = vec!["word"; 1025].join(" ");
        let pairs = vec![pair("short text", "curto"), pair(&long_source, "x")];
        let summary =
            export_corpus(&pairs, &template, &Tokenizer::Whitespace, 1024, &out).unwrap();
        assert_eq!(summary.written, 1);
        assert_eq!(summary.skipped.len(), 1);
        assert_eq!(summary.skipped[0].tokens, 1026);
        assert_eq!(summary.written + summary.skipped.len() as u64, 2);
    }

    #[test]
    fn export_of_empty_corpus_is_a_valid_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("sft.jsonl");
        let summary = export_corpus(
            &[],
            &PromptTemplate::default(),
            &Tokenizer::Whitespace,
            1024,
            &out,
        )
        .unwrap();
        assert_eq!(summary.written, 0);
        assert_eq!(std::fs::read_to_string(&out).unwrap(), "");
    }
}
