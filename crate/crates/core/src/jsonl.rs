//! JSONL corpus files: one JSON object per line, UTF-8, snake_case keys.
//!
//! Readers are fail-soft: a malformed line becomes a `LineError` carrying
//! the 1-based line number and the stream continues. Unknown top-level
//! keys on documents are preserved into `meta` (stringified when they are
//! not already strings) so foreign sidecar fields survive a pass through
//! the pipeline.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::corpus::{decode_utf8, Document, DomainTag, ParallelPair, Variety};
use crate::error::CorpusError;

/// A per-line failure from a fail-soft reader.
#[derive(Debug, Clone, Serialize)]
pub struct LineError {
    pub line: u64,
    pub message: String,
}

#[derive(Deserialize)]
struct DocumentWire {
    id: String,
    text: String,
    variety: Variety,
    domain: DomainTag,
    source: String,
    #[serde(default)]
    meta: BTreeMap<String, String>,
    #[serde(flatten)]
    extra: BTreeMap<String, serde_json::Value>,
}

impl From<DocumentWire> for Document {
    fn from(wire: DocumentWire) -> Document {
        let mut meta = wire.meta;
        for (key, value) in wire.extra {
            let rendered = match value {
                serde_json::Value::String(s) => s,
                other => other.to_string(),
            };
            meta.entry(key).or_insert(rendered);
        }
        Document {
            id: wire.id,
            text: wire.text,
            variety: wire.variety,
            domain: wire.domain,
            source: wire.source,
            meta,
        }
    }
}

/// Iterates over the lines of a JSONL file, decoding each as `T`.
pub struct JsonlReader<T> {
    reader: BufReader<File>,
    path: PathBuf,
    line: u64,
    buf: Vec<u8>,
    _marker: std::marker::PhantomData<T>,
}

impl<T: DeserializeOwned> JsonlReader<T> {
    pub fn open(path: &Path) -> Result<JsonlReader<T>, CorpusError> {
        let file = File::open(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(JsonlReader {
            reader: BufReader::new(file),
            path: path.to_path_buf(),
            line: 0,
            buf: Vec::new(),
            _marker: std::marker::PhantomData,
        })
    }

    fn next_record(&mut self) -> Option<Result<T, LineError>> {
        loop {
            self.buf.clear();
            match self.reader.read_until(b'\n', &mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => {
                    self.line += 1;
                    return Some(Err(LineError {
                        line: self.line,
                        message: format!("read error on {}: {e}", self.path.display()),
                    }));
                }
            }
            self.line += 1;
            let text = match decode_utf8(&self.buf) {
                Ok(t) => t.trim_end_matches(['\n', '\r']),
                Err(e) => {
                    return Some(Err(LineError {
                        line: self.line,
                        message: e.to_string(),
                    }))
                }
            };
            if text.trim().is_empty() {
                continue; // skip blank lines
            }
            return match serde_json::from_str::<T>(text) {
                Ok(value) => Some(Ok(value)),
                Err(e) => Some(Err(LineError {
                    line: self.line,
                    message: e.to_string(),
                })),
            };
        }
    }
}

impl<T: DeserializeOwned> Iterator for JsonlReader<T> {
    type Item = Result<T, LineError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_record()
    }
}

/// Opens a fail-soft document reader; unknown keys land in `meta`.
pub fn read_documents(
    path: &Path,
) -> Result<impl Iterator<Item = Result<Document, LineError>>, CorpusError> {
    let reader: JsonlReader<DocumentWire> = JsonlReader::open(path)?;
    Ok(reader.map(|item| item.map(Document::from)))
}

/// Opens a fail-soft parallel-pair reader.
pub fn read_pairs(
    path: &Path,
) -> Result<impl Iterator<Item = Result<ParallelPair, LineError>>, CorpusError> {
    JsonlReader::<ParallelPair>::open(path)
}

/// Serializes records to a JSONL file, one per line, creating parent
/// directories as needed.
pub struct JsonlWriter {
    writer: BufWriter<File>,
    path: PathBuf,
    written: u64,
}

impl JsonlWriter {
    pub fn create(path: &Path) -> Result<JsonlWriter, CorpusError> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(|source| CorpusError::Io {
                    path: path.to_path_buf(),
                    source,
                })?;
            }
        }
        let file = File::create(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(JsonlWriter {
            writer: BufWriter::new(file),
            path: path.to_path_buf(),
            written: 0,
        })
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<(), CorpusError> {
        let line = serde_json::to_string(record)?;
        self.writer
            .write_all(line.as_bytes())
            .and_then(|_| self.writer.write_all(b"\n"))
            .map_err(|source| CorpusError::Io {
                path: self.path.clone(),
                source,
            })?;
        self.written += 1;
        Ok(())
    }

    pub fn written(&self) -> u64 {
        self.written
    }

    pub fn finish(mut self) -> Result<u64, CorpusError> {
        self.writer.flush().map_err(|source| CorpusError::Io {
            path: self.path.clone(),
            source,
        })?;
        Ok(self.written)
    }
}

/// Reads any JSON value per line together with its line number. Used by
/// format-sniffing callers (e.g. the filter CLI) that decide document vs
/// pair per file.
pub fn read_raw_lines(
    path: &Path,
) -> Result<impl Iterator<Item = Result<(u64, serde_json::Value), LineError>>, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = BufReader::new(file);
    let mut line_no = 0u64;
    Ok(std::iter::from_fn(move || {
        let mut buf = Vec::new();
        loop {
            buf.clear();
            match reader.read_until(b'\n', &mut buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => {
                    line_no += 1;
                    return Some(Err(LineError {
                        line: line_no,
                        message: e.to_string(),
                    }));
                }
            }
            line_no += 1;
            let text = match decode_utf8(&buf) {
                Ok(t) => t.trim_end_matches(['\n', '\r']),
                Err(e) => {
                    return Some(Err(LineError {
                        line: line_no,
                        message: e.to_string(),
                    }))
                }
            };
            if text.trim().is_empty() {
                continue;
            }
            return match serde_json::from_str(text) {
                Ok(v) => Some(Ok((line_no, v))),
                Err(e) => Some(Err(LineError {
                    line: line_no,
                    message: e.to_string(),
                })),
            };
        }
    }))
}

/// Reads an entire file as UTF-8, reporting the byte offset on decode
/// failure.
pub fn read_to_string(path: &Path) -> Result<String, CorpusError> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    decode_utf8(&bytes).map(str::to_owned)
}
