//! Core data model shared by every pipeline stage: documents, parallel
//! pairs, text normalization, and validation.
//!
//! All types are plain immutable values once constructed; they can be
//! cloned and moved across worker threads freely.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::CorpusError;

/// Language-variety label carried by a monolingual document.
///
/// `Unlabeled` exists for source corpora without annotations; such
/// documents are rejected by the variety selector instead of guessed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variety {
    TargetVariety,
    OtherVariety,
    Both,
    Unlabeled,
}

impl Variety {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variety::TargetVariety => "target-variety",
            Variety::OtherVariety => "other-variety",
            Variety::Both => "both",
            Variety::Unlabeled => "unlabeled",
        }
    }
}

impl std::fmt::Display for Variety {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Content domain of a document. Unknown labels map to `Other` rather
/// than dropping the document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainTag {
    Journalistic,
    Literature,
    Web,
    Politics,
    Legal,
    SocialMedia,
    NewsAnnotated,
    Other,
}

impl DomainTag {
    /// Every tag in presentation order.
    pub const ALL: [DomainTag; 8] = [
        DomainTag::Journalistic,
        DomainTag::Literature,
        DomainTag::Web,
        DomainTag::Politics,
        DomainTag::Legal,
        DomainTag::SocialMedia,
        DomainTag::NewsAnnotated,
        DomainTag::Other,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DomainTag::Journalistic => "journalistic",
            DomainTag::Literature => "literature",
            DomainTag::Web => "web",
            DomainTag::Politics => "politics",
            DomainTag::Legal => "legal",
            DomainTag::SocialMedia => "social-media",
            DomainTag::NewsAnnotated => "news-annotated",
            DomainTag::Other => "other",
        }
    }

    /// Maps an arbitrary label to a tag; anything unrecognized becomes
    /// `Other`.
    pub fn from_label(label: &str) -> DomainTag {
        match label.trim().to_lowercase().as_str() {
            "journalistic" | "journalism" => DomainTag::Journalistic,
            "literature" => DomainTag::Literature,
            "web" => DomainTag::Web,
            "politics" | "political" => DomainTag::Politics,
            "legal" | "law" => DomainTag::Legal,
            "social-media" | "social media" | "social_media" => DomainTag::SocialMedia,
            "news-annotated" | "news annotated" | "news_annotated" => DomainTag::NewsAnnotated,
            _ => DomainTag::Other,
        }
    }
}

impl<'de> Deserialize<'de> for DomainTag {
    fn deserialize<D>(deserializer: D) -> Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let label = String::deserialize(deserializer)?;
        Ok(DomainTag::from_label(&label))
    }
}

impl std::fmt::Display for DomainTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One monolingual text with its variety label and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub variety: Variety,
    pub domain: DomainTag,
    pub source: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

/// An aligned (source-language, target-variety) record produced by the
/// translation gateway. `source_text` is in the resource-rich language;
/// `target_text` is the original variety text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelPair {
    pub id: String,
    pub source_text: String,
    pub target_text: String,
    pub domain: DomainTag,
    pub backend_id: String,
    pub created_at: DateTime<Utc>,
}

/// Decodes bytes as UTF-8, reporting the byte offset of the first invalid
/// sequence on failure.
pub fn decode_utf8(bytes: &[u8]) -> Result<&str, CorpusError> {
    std::str::from_utf8(bytes).map_err(|e| CorpusError::InvalidUtf8 {
        offset: e.valid_up_to(),
    })
}

/// Canonicalizes raw text: CR/LF to LF, Unicode NFC, runs of spaces and
/// tabs collapsed to a single space (newlines kept), ends trimmed.
///
/// Idempotent: applying it twice equals applying it once.
pub fn normalize_text(raw: &str) -> String {
    let unified = raw.replace("\r\n", "\n").replace('\r', "\n");
    let composed: String = unified.nfc().collect();

    let mut out = String::with_capacity(composed.len());
    let mut in_blank_run = false;
    for ch in composed.chars() {
        if ch == ' ' || ch == '\t' {
            if !in_blank_run {
                out.push(' ');
                in_blank_run = true;
            }
        } else {
            out.push(ch);
            in_blank_run = false;
        }
    }
    out.trim().to_string()
}

/// A single invariant violation found by validation. Violations are data,
/// not errors: callers decide what to do with them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub doc_id: String,
    pub field: String,
    pub rule: String,
}

impl Violation {
    fn new(doc_id: &str, field: &str, rule: &str) -> Violation {
        Violation {
            doc_id: doc_id.to_string(),
            field: field.to_string(),
            rule: rule.to_string(),
        }
    }
}

/// Checks the per-document invariants; an empty result means the document
/// is well-formed.
pub fn validate_document(doc: &Document) -> Vec<Violation> {
    let mut violations = Vec::new();
    if doc.id.trim().is_empty() {
        violations.push(Violation::new(&doc.id, "id", "id.empty"));
    }
    if doc.text.trim().is_empty() {
        violations.push(Violation::new(&doc.id, "text", "text.empty"));
    }
    violations
}

/// Validates a batch, adding `id.duplicate` violations for ids that occur
/// more than once. Duplicates are flagged on the second and later uses.
pub fn validate_batch(docs: &[Document]) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for doc in docs {
        violations.extend(validate_document(doc));
        if !seen.insert(doc.id.as_str()) {
            violations.push(Violation::new(&doc.id, "id", "id.duplicate"));
        }
    }
    violations
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, text: &str) -> Document {
        Document {
            id: id.to_string(),
            text: text.to_string(),
            variety: Variety::TargetVariety,
            domain: DomainTag::Legal,
            source: "test".to_string(),
            meta: BTreeMap::new(),
        }
    }

    #[test]
    fn normalize_trims_and_unifies_newlines() {
        assert_eq!(normalize_text("  ola\r\n"), "ola");
    }

    #[test]
    fn normalize_composes_nfc() {
        assert_eq!(normalize_text("e\u{301}"), "é");
    }

    #[test]
    fn normalize_collapses_spaces_and_tabs() {
        assert_eq!(normalize_text("a  b\tc"), "a b c");
    }

    #[test]
    fn normalize_preserves_newlines() {
        assert_eq!(normalize_text("para1\n\npara2"), "para1\n\npara2");
        assert_eq!(normalize_text("a  \n  b"), "a \n b");
    }

    #[test]
    fn validate_accepts_well_formed_doc() {
        assert!(validate_document(&doc("d1", "algum texto")).is_empty());
    }

    #[test]
    fn validate_flags_empty_text() {
        let violations = validate_document(&doc("d1", "   "));
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].rule, "text.empty");
    }

    #[test]
    fn validate_flags_duplicate_ids_in_batch() {
        let batch = vec![doc("d1", "a"), doc("d2", "b"), doc("d1", "c")];
        let violations = validate_batch(&batch);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].rule, "id.duplicate");
        assert_eq!(violations[0].doc_id, "d1");
    }

    #[test]
    fn unknown_domain_labels_map_to_other() {
        assert_eq!(DomainTag::from_label("finance"), DomainTag::Other);
        assert_eq!(DomainTag::from_label("Social Media"), DomainTag::SocialMedia);
    }
}
