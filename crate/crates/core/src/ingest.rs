//! Loading heterogeneous source corpora into the canonical document
//! stream, plus variety-label selection.
//!
//! Readers are fail-soft: malformed rows become per-line error records
//! and the stream continues, so a few corrupt lines in a multi-million
//! line corpus never abort a run. Ids are assigned as
//! `<source>:<line-number>` when the input has none.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{decode_utf8, normalize_text, Document, DomainTag, Variety};
use crate::error::{ConfigError, IngestError};
use crate::jsonl::LineError;

/// Input file layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IngestFormat {
    Jsonl,
    Csv,
    PlainTextPerLine,
}

/// Binding of input fields/columns to document fields. `text` is
/// required for structured formats.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldMapping {
    pub text: Option<String>,
    pub id: Option<String>,
    pub variety: Option<String>,
    pub domain: Option<String>,
}

/// Declarative ingest configuration, loaded from a TOML file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestSpec {
    pub path: PathBuf,
    pub format: IngestFormat,
    #[serde(default)]
    pub mapping: FieldMapping,
    pub default_domain: DomainTag,
    pub source: String,
    /// Extra label aliases merged over the built-in table.
    #[serde(default)]
    pub variety_aliases: BTreeMap<String, Variety>,
    /// When present, only documents with these labels pass through.
    #[serde(default)]
    pub accept_varieties: Option<BTreeSet<Variety>>,
}

impl IngestSpec {
    pub fn load(path: &Path) -> Result<IngestSpec, IngestError> {
        let raw = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut spec: IngestSpec = toml::from_str(&raw).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if spec.path.is_relative() {
            if let Some(dir) = path.parent() {
                spec.path = dir.join(&spec.path);
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if !self.path.exists() {
            return Err(ConfigError::MissingPath(self.path.clone()).into());
        }
        if self.format != IngestFormat::PlainTextPerLine && self.mapping.text.is_none() {
            return Err(ConfigError::Invalid(
                "mapping must bind the text field for jsonl/csv inputs".to_string(),
            )
            .into());
        }
        Ok(())
    }
}

/// Case-insensitive label-to-variety lookup with the stock aliases plus
/// any spec-level additions.
#[derive(Debug, Clone)]
pub struct VarietyAliases {
    table: BTreeMap<String, Variety>,
}

impl VarietyAliases {
    pub fn with_overrides(extra: &BTreeMap<String, Variety>) -> VarietyAliases {
        let mut table = BTreeMap::new();
        let defaults: [(&str, Variety); 10] = [
            ("european portuguese", Variety::TargetVariety),
            ("pt-pt", Variety::TargetVariety),
            ("target-variety", Variety::TargetVariety),
            ("target", Variety::TargetVariety),
            ("brazilian portuguese", Variety::OtherVariety),
            ("pt-br", Variety::OtherVariety),
            ("other-variety", Variety::OtherVariety),
            ("other", Variety::OtherVariety),
            ("both", Variety::Both),
            ("unlabeled", Variety::Unlabeled),
        ];
        for (label, variety) in defaults {
            table.insert(label.to_string(), variety);
        }
        for (label, variety) in extra {
            table.insert(label.trim().to_lowercase(), *variety);
        }
        VarietyAliases { table }
    }

    /// Unknown labels come back as `Unlabeled`; ingestion never guesses.
    pub fn resolve(&self, label: &str) -> Variety {
        self.table
            .get(&label.trim().to_lowercase())
            .copied()
            .unwrap_or(Variety::Unlabeled)
    }
}

/// A streaming corpus reader: documents in file order interleaved with
/// per-line error records.
pub struct CorpusReader {
    inner: Box<dyn Iterator<Item = Result<Document, LineError>>>,
}

impl Iterator for CorpusReader {
    type Item = Result<Document, LineError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.inner.next()
    }
}

/// Opens the corpus described by `spec`. Structural problems (missing
/// file, unmapped csv column) fail here; row-level problems surface as
/// line errors during iteration.
pub fn load_corpus(spec: &IngestSpec) -> Result<CorpusReader, IngestError> {
    spec.validate()?;
    let aliases = VarietyAliases::with_overrides(&spec.variety_aliases);
    match spec.format {
        IngestFormat::PlainTextPerLine => load_plain(spec),
        IngestFormat::Jsonl => load_jsonl(spec, aliases),
        IngestFormat::Csv => load_csv(spec, aliases),
    }
}

fn open_lines(
    path: &Path,
) -> Result<impl Iterator<Item = (u64, Result<String, LineError>)>, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = BufReader::new(file);
    let mut line_no = 0u64;
    Ok(std::iter::from_fn(move || {
        let mut buf = Vec::new();
        match reader.read_until(b'\n', &mut buf) {
            Ok(0) => None,
            Ok(_) => {
                line_no += 1;
                let item = decode_utf8(&buf)
                    .map(|t| t.trim_end_matches(['\n', '\r']).to_string())
                    .map_err(|e| LineError {
                        line: line_no,
                        message: e.to_string(),
                    });
                Some((line_no, item))
            }
            Err(e) => {
                line_no += 1;
                Some((
                    line_no,
                    Err(LineError {
                        line: line_no,
                        message: e.to_string(),
                    }),
                ))
            }
        }
    }))
}

fn load_plain(spec: &IngestSpec) -> Result<CorpusReader, IngestError> {
    let source = spec.source.clone();
    let domain = spec.default_domain;
    let lines = open_lines(&spec.path)?;
    let iter = lines.filter_map(move |(line_no, item)| match item {
        Err(e) => Some(Err(e)),
        Ok(raw) => {
            let text = normalize_text(&raw);
            if text.is_empty() {
                return None; // blank lines are not documents
            }
            Some(Ok(Document {
                id: format!("{source}:{line_no}"),
                text,
                variety: Variety::Unlabeled,
                domain,
                source: source.clone(),
                meta: BTreeMap::new(),
            }))
        }
    });
    Ok(CorpusReader {
        inner: Box::new(iter),
    })
}

fn load_jsonl(spec: &IngestSpec, aliases: VarietyAliases) -> Result<CorpusReader, IngestError> {
    let source = spec.source.clone();
    let domain = spec.default_domain;
    let mapping = spec.mapping.clone();
    let text_field = mapping.text.clone().expect("validated");
    let lines = open_lines(&spec.path)?;

    let iter = lines.filter_map(move |(line_no, item)| {
        let raw = match item {
            Err(e) => return Some(Err(e)),
            Ok(raw) => raw,
        };
        if raw.trim().is_empty() {
            return None;
        }
        let value: serde_json::Value = match serde_json::from_str(&raw) {
            Ok(v) => v,
            Err(e) => {
                return Some(Err(LineError {
                    line: line_no,
                    message: e.to_string(),
                }))
            }
        };
        let field_str = |name: &str| -> Option<String> {
            match value.get(name) {
                Some(serde_json::Value::String(s)) => Some(s.clone()),
                Some(other) if !other.is_null() => Some(other.to_string()),
                _ => None,
            }
        };
        let Some(raw_text) = field_str(&text_field) else {
            return Some(Err(LineError {
                line: line_no,
                message: format!("missing mapped text field '{text_field}'"),
            }));
        };
        let text = normalize_text(&raw_text);
        if text.is_empty() {
            return Some(Err(LineError {
                line: line_no,
                message: "text is empty after normalization".to_string(),
            }));
        }
        let id = mapping
            .id
            .as_ref()
            .and_then(|f| field_str(f))
            .unwrap_or_else(|| format!("{source}:{line_no}"));
        let variety = mapping
            .variety
            .as_ref()
            .and_then(|f| field_str(f))
            .map(|label| aliases.resolve(&label))
            .unwrap_or(Variety::Unlabeled);
        let mut meta = BTreeMap::new();
        let domain = match mapping.domain.as_ref().and_then(|f| field_str(f)) {
            Some(label) => {
                let tag = DomainTag::from_label(&label);
                if tag == DomainTag::Other {
                    meta.insert("domain_label".to_string(), label);
                }
                tag
            }
            None => domain,
        };
        Some(Ok(Document {
            id,
            text,
            variety,
            domain,
            source: source.clone(),
            meta,
        }))
    });
    Ok(CorpusReader {
        inner: Box::new(iter),
    })
}

fn load_csv(spec: &IngestSpec, aliases: VarietyAliases) -> Result<CorpusReader, IngestError> {
    let file = std::fs::File::open(&spec.path).map_err(|source| IngestError::Open {
        path: spec.path.clone(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| ConfigError::Parse {
            path: spec.path.clone(),
            message: e.to_string(),
        })?
        .clone();

    let column = |name: &Option<String>| -> Result<Option<usize>, IngestError> {
        match name {
            None => Ok(None),
            Some(n) => headers
                .iter()
                .position(|h| h == n)
                .map(Some)
                .ok_or_else(|| IngestError::MissingColumn(n.clone())),
        }
    };
    let text_col = column(&spec.mapping.text)?.expect("validated");
    let id_col = column(&spec.mapping.id)?;
    let variety_col = column(&spec.mapping.variety)?;
    let domain_col = column(&spec.mapping.domain)?;

    let source = spec.source.clone();
    let default_domain = spec.default_domain;
    let mut records = reader.into_records();
    let mut line_no = 1u64; // header occupies line 1

    let iter = std::iter::from_fn(move || {
        let record = records.next()?;
        line_no += 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                return Some(Err(LineError {
                    line: line_no,
                    message: e.to_string(),
                }))
            }
        };
        let Some(raw_text) = record.get(text_col) else {
            return Some(Err(LineError {
                line: line_no,
                message: "row is missing the mapped text column".to_string(),
            }));
        };
        let text = normalize_text(raw_text);
        if text.is_empty() {
            return Some(Err(LineError {
                line: line_no,
                message: "text is empty after normalization".to_string(),
            }));
        }
        let id = id_col
            .and_then(|c| record.get(c))
            .filter(|s| !s.trim().is_empty())
            .map(str::to_string)
            .unwrap_or_else(|| format!("{source}:{line_no}"));
        let variety = variety_col
            .and_then(|c| record.get(c))
            .map(|label| aliases.resolve(label))
            .unwrap_or(Variety::Unlabeled);
        let mut meta = BTreeMap::new();
        let domain = match domain_col.and_then(|c| record.get(c)) {
            Some(label) if !label.trim().is_empty() => {
                let tag = DomainTag::from_label(label);
                if tag == DomainTag::Other {
                    meta.insert("domain_label".to_string(), label.to_string());
                }
                tag
            }
            _ => default_domain,
        };
        Some(Ok(Document {
            id,
            text,
            variety,
            domain,
            source: source.clone(),
            meta,
        }))
    });
    Ok(CorpusReader {
        inner: Box::new(iter),
    })
}

/// Per-label accounting from a variety selection pass.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SelectionReport {
    pub kept: u64,
    pub dropped: u64,
    pub dropped_by_label: BTreeMap<Variety, u64>,
}

/// Keeps exactly the documents whose variety is in `accept`, preserving
/// input order.
pub fn select_variety(
    docs: impl IntoIterator<Item = Document>,
    accept: &BTreeSet<Variety>,
) -> (Vec<Document>, SelectionReport) {
    let mut report = SelectionReport::default();
    let mut kept = Vec::new();
    for doc in docs {
        if accept.contains(&doc.variety) {
            report.kept += 1;
            kept.push(doc);
        } else {
            report.dropped += 1;
            *report.dropped_by_label.entry(doc.variety).or_insert(0) += 1;
        }
    }
    (kept, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(dir: &tempfile::TempDir, name: &str, content: &str) -> PathBuf {
        let path = dir.path().join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    fn plain_spec(path: PathBuf) -> IngestSpec {
        IngestSpec {
            path,
            format: IngestFormat::PlainTextPerLine,
            mapping: FieldMapping::default(),
            default_domain: DomainTag::Legal,
            source: "mycorpus".to_string(),
            variety_aliases: BTreeMap::new(),
            accept_varieties: None,
        }
    }

    #[test]
    fn plain_text_lines_become_documents_with_line_ids() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "corpus.txt", "primeira linha\nsegunda linha\nterceira\n");
        let docs: Vec<Document> = load_corpus(&plain_spec(path))
            .unwrap()
            .map(|r| r.unwrap())
            .collect();
        assert_eq!(docs.len(), 3);
        assert_eq!(docs[0].id, "mycorpus:1");
        assert_eq!(docs[2].id, "mycorpus:3");
        assert!(docs.iter().all(|d| d.domain == DomainTag::Legal));
        assert!(docs.iter().all(|d| d.variety == Variety::Unlabeled));
    }

    #[test]
    fn jsonl_rows_map_labels_through_the_alias_table() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "rows.jsonl",
            concat!(
                "{\"body\":\"texto um\",\"label\":\"European Portuguese\"}\n",
                "{\"body\":\"texto dois\",\"label\":\"Brazilian Portuguese\"}\n",
                "{\"body\":\"texto três\",\"label\":\"Both\"}\n",
                "{\"body\":\"texto quatro\",\"label\":\"Mystery\"}\n",
            ),
        );
        let spec = IngestSpec {
            format: IngestFormat::Jsonl,
            mapping: FieldMapping {
                text: Some("body".to_string()),
                variety: Some("label".to_string()),
                ..Default::default()
            },
            ..plain_spec(path)
        };
        let docs: Vec<Document> = load_corpus(&spec).unwrap().map(|r| r.unwrap()).collect();
        assert_eq!(docs[0].variety, Variety::TargetVariety);
        assert_eq!(docs[1].variety, Variety::OtherVariety);
        assert_eq!(docs[2].variety, Variety::Both);
        assert_eq!(docs[3].variety, Variety::Unlabeled);
    }

    #[test]
    fn malformed_jsonl_rows_are_fail_soft() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "rows.jsonl",
            "{\"body\":\"ok\"}\nnot json at all\n{\"body\":\"ok two\"}\n",
        );
        let spec = IngestSpec {
            format: IngestFormat::Jsonl,
            mapping: FieldMapping {
                text: Some("body".to_string()),
                ..Default::default()
            },
            ..plain_spec(path)
        };
        let results: Vec<_> = load_corpus(&spec).unwrap().collect();
        let errors: Vec<_> = results.iter().filter(|r| r.is_err()).collect();
        assert_eq!(results.len(), 3);
        assert_eq!(errors.len(), 1);
    }

    #[test]
    fn csv_with_missing_mapped_column_fails_at_open() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "rows.csv", "a,b\n1,2\n");
        let spec = IngestSpec {
            format: IngestFormat::Csv,
            mapping: FieldMapping {
                text: Some("body".to_string()),
                ..Default::default()
            },
            ..plain_spec(path)
        };
        assert!(matches!(
            load_corpus(&spec),
            Err(IngestError::MissingColumn(c)) if c == "body"
        ));
    }

    #[test]
    fn csv_rows_map_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "rows.csv",
            "docid,body,label\nx1,algum texto,pt-PT\nx2,outro texto,pt-BR\n",
        );
        let spec = IngestSpec {
            format: IngestFormat::Csv,
            mapping: FieldMapping {
                text: Some("body".to_string()),
                id: Some("docid".to_string()),
                variety: Some("label".to_string()),
                ..Default::default()
            },
            ..plain_spec(path)
        };
        let docs: Vec<Document> = load_corpus(&spec).unwrap().map(|r| r.unwrap()).collect();
        assert_eq!(docs[0].id, "x1");
        assert_eq!(docs[0].variety, Variety::TargetVariety);
        assert_eq!(docs[1].variety, Variety::OtherVariety);
    }

    #[test]
    fn selection_keeps_accepted_labels_and_counts_drops() {
        let make = |id: &str, v: Variety| Document {
            id: id.to_string(),
            text: "t".to_string(),
            variety: v,
            domain: DomainTag::Web,
            source: "s".to_string(),
            meta: BTreeMap::new(),
        };
        let docs = vec![
            make("1", Variety::TargetVariety),
            make("2", Variety::OtherVariety),
            make("3", Variety::Both),
        ];
        let accept = BTreeSet::from([Variety::TargetVariety, Variety::Both]);
        let (kept, report) = select_variety(docs.clone(), &accept);
        assert_eq!(kept.len(), 2);
        assert_eq!(report.kept, 2);
        assert_eq!(report.dropped, 1);
        assert_eq!(report.dropped_by_label[&Variety::OtherVariety], 1);

        let all: BTreeSet<Variety> = [
            Variety::TargetVariety,
            Variety::OtherVariety,
            Variety::Both,
            Variety::Unlabeled,
        ]
        .into();
        let (kept, _) = select_variety(docs.clone(), &all);
        assert_eq!(kept.len(), 3);

        let (kept, report) = select_variety(docs, &BTreeSet::new());
        assert!(kept.is_empty());
        assert_eq!(report.dropped, 3);
    }
}
