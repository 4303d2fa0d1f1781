//! Token counting for the length filter, corpus statistics, and export
//! budgeting.
//!
//! Two tokenizers are supported: a plain whitespace splitter and a
//! byte-level BPE loaded from the standard two-file layout (a JSON
//! token-to-id vocabulary plus an ordered merges file, one pair per
//! line). A loaded tokenizer is immutable and safe to share across
//! worker threads.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, TokenizerError};
use crate::jsonl;

/// Declarative tokenizer selection, usually parsed from a config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum TokenizerSpec {
    Whitespace,
    ByteLevelBpe { vocab: PathBuf, merges: PathBuf },
}

impl TokenizerSpec {
    /// Parses a CLI-style tokenizer argument: the literal `whitespace` or
    /// the path of a TOML spec file.
    pub fn from_arg(arg: &str) -> Result<TokenizerSpec, TokenizerError> {
        if arg == "whitespace" {
            return Ok(TokenizerSpec::Whitespace);
        }
        let path = Path::new(arg);
        let raw = std::fs::read_to_string(path).map_err(|source| {
            TokenizerError::Config(ConfigError::Read {
                path: path.to_path_buf(),
                source,
            })
        })?;
        let mut spec: TokenizerSpec =
            toml::from_str(&raw).map_err(|e| ConfigError::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        // Vocabulary paths are relative to the spec file.
        if let TokenizerSpec::ByteLevelBpe { vocab, merges } = &mut spec {
            if let Some(dir) = path.parent() {
                if vocab.is_relative() {
                    *vocab = dir.join(&vocab);
                }
                if merges.is_relative() {
                    *merges = dir.join(&merges);
                }
            }
        }
        Ok(spec)
    }
}

/// A ready-to-use tokenizer.
pub enum Tokenizer {
    Whitespace,
    ByteLevelBpe(BpeTokenizer),
}

impl Tokenizer {
    pub fn load(spec: &TokenizerSpec) -> Result<Tokenizer, TokenizerError> {
        match spec {
            TokenizerSpec::Whitespace => Ok(Tokenizer::Whitespace),
            TokenizerSpec::ByteLevelBpe { vocab, merges } => {
                Ok(Tokenizer::ByteLevelBpe(BpeTokenizer::load(vocab, merges)?))
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Tokenizer::Whitespace => "whitespace",
            Tokenizer::ByteLevelBpe(_) => "byte-level-bpe",
        }
    }

    /// Number of tokens in `text`. For whitespace this is the number of
    /// maximal non-whitespace runs; for BPE the number of subword symbols
    /// left after merge application (no id lookup involved).
    pub fn count_tokens(&self, text: &str) -> Result<u64, TokenizerError> {
        match self {
            Tokenizer::Whitespace => Ok(text.split_whitespace().count() as u64),
            Tokenizer::ByteLevelBpe(bpe) => Ok(bpe.symbols(text) as u64),
        }
    }

    /// Token ids for `text`. `count_tokens(text) == tokenize(text).len()`
    /// whenever `tokenize` succeeds.
    pub fn tokenize(&self, text: &str) -> Result<Vec<u32>, TokenizerError> {
        match self {
            Tokenizer::Whitespace => {
                // The whitespace tokenizer has no external vocabulary;
                // ids are assigned per call by first occurrence, which
                // keeps identical text mapping to identical ids.
                let mut interner: HashMap<&str, u32> = HashMap::new();
                let mut ids = Vec::new();
                for token in text.split_whitespace() {
                    let next = interner.len() as u32;
                    ids.push(*interner.entry(token).or_insert(next));
                }
                Ok(ids)
            }
            Tokenizer::ByteLevelBpe(bpe) => bpe.encode(text),
        }
    }
}

/// Byte-level BPE: text is split into pieces, each piece's UTF-8 bytes
/// are mapped onto the printable byte alphabet, and the ordered merge
/// table is applied until no adjacent pair has a rank.
pub struct BpeTokenizer {
    vocab: HashMap<String, u32>,
    ranks: HashMap<(String, String), usize>,
    byte_alphabet: [char; 256],
}

impl BpeTokenizer {
    pub fn load(vocab_path: &Path, merges_path: &Path) -> Result<BpeTokenizer, TokenizerError> {
        for path in [vocab_path, merges_path] {
            if !path.exists() {
                return Err(ConfigError::MissingPath(path.to_path_buf()).into());
            }
        }
        let vocab_raw = jsonl::read_to_string(vocab_path).map_err(|e| ConfigError::Parse {
            path: vocab_path.to_path_buf(),
            message: e.to_string(),
        })?;
        let vocab: HashMap<String, u32> =
            serde_json::from_str(&vocab_raw).map_err(|e| TokenizerError::MalformedVocab {
                path: vocab_path.to_path_buf(),
                line: e.line(),
                message: e.to_string(),
            })?;

        let merges_raw = jsonl::read_to_string(merges_path).map_err(|e| ConfigError::Parse {
            path: merges_path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut ranks = HashMap::new();
        let mut rank = 0usize;
        for (idx, line) in merges_raw.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue; // header or comment
            }
            let mut parts = trimmed.split(' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(left), Some(right), None) => {
                    ranks.insert((left.to_string(), right.to_string()), rank);
                    rank += 1;
                }
                _ => {
                    return Err(TokenizerError::MalformedVocab {
                        path: merges_path.to_path_buf(),
                        line: idx + 1,
                        message: format!("expected 'LEFT RIGHT', got '{trimmed}'"),
                    })
                }
            }
        }
        Ok(BpeTokenizer {
            vocab,
            ranks,
            byte_alphabet: byte_alphabet(),
        })
    }

    /// Splits text into pre-tokenization pieces: runs of letters, runs of
    /// digits, runs of other non-whitespace, each optionally claiming one
    /// preceding space; leftover whitespace forms its own pieces.
    fn pieces<'a>(&self, text: &'a str) -> Vec<(bool, &'a str)> {
        #[derive(PartialEq, Clone, Copy)]
        enum Class {
            Letter,
            Digit,
            Other,
        }
        fn class_of(c: char) -> Option<Class> {
            if c.is_whitespace() {
                None
            } else if c.is_alphabetic() {
                Some(Class::Letter)
            } else if c.is_numeric() {
                Some(Class::Digit)
            } else {
                Some(Class::Other)
            }
        }

        let mut pieces = Vec::new();
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut i = 0;
        while i < chars.len() {
            let (start, c) = chars[i];
            if let Some(class) = class_of(c) {
                let mut j = i + 1;
                while j < chars.len() && class_of(chars[j].1) == Some(class) {
                    j += 1;
                }
                let end = if j < chars.len() { chars[j].0 } else { text.len() };
                pieces.push((false, &text[start..end]));
                i = j;
            } else {
                // Whitespace run. A final ' ' directly before a
                // non-whitespace char attaches to the following piece.
                let mut j = i;
                while j < chars.len() && class_of(chars[j].1).is_none() {
                    j += 1;
                }
                let mut run_end = j;
                let attach = j < chars.len() && chars[j - 1].1 == ' ';
                if attach {
                    run_end = j - 1;
                }
                if run_end > i {
                    let end = if run_end < chars.len() {
                        chars[run_end].0
                    } else {
                        text.len()
                    };
                    pieces.push((false, &text[chars[i].0..end]));
                }
                if attach {
                    // Mark the next piece as space-prefixed.
                    let (start, c) = chars[j];
                    let class = class_of(c).unwrap();
                    let mut k = j + 1;
                    while k < chars.len() && class_of(chars[k].1) == Some(class) {
                        k += 1;
                    }
                    let end = if k < chars.len() { chars[k].0 } else { text.len() };
                    pieces.push((true, &text[start..end]));
                    i = k;
                } else {
                    i = j;
                }
            }
        }
        pieces
    }

    fn merge_piece(&self, piece: &str, space_prefixed: bool) -> Vec<String> {
        let mut symbols: Vec<String> = Vec::new();
        if space_prefixed {
            symbols.push(self.byte_alphabet[b' ' as usize].to_string());
        }
        for byte in piece.bytes() {
            symbols.push(self.byte_alphabet[byte as usize].to_string());
        }
        loop {
            let mut best: Option<(usize, usize)> = None; // (rank, index)
            for idx in 0..symbols.len().saturating_sub(1) {
                let key = (symbols[idx].clone(), symbols[idx + 1].clone());
                if let Some(&rank) = self.ranks.get(&key) {
                    if best.map_or(true, |(r, _)| rank < r) {
                        best = Some((rank, idx));
                    }
                }
            }
            match best {
                Some((_, idx)) => {
                    let merged = format!("{}{}", symbols[idx], symbols[idx + 1]);
                    symbols.splice(idx..idx + 2, [merged]);
                }
                None => break,
            }
        }
        symbols
    }

    fn all_symbols(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        for (prefixed, piece) in self.pieces(text) {
            out.extend(self.merge_piece(piece, prefixed));
        }
        out
    }

    fn symbols(&self, text: &str) -> usize {
        self.all_symbols(text).len()
    }

    fn encode(&self, text: &str) -> Result<Vec<u32>, TokenizerError> {
        self.all_symbols(text)
            .into_iter()
            .map(|sym| {
                self.vocab
                    .get(&sym)
                    .copied()
                    .ok_or(TokenizerError::UnknownToken(sym))
            })
            .collect()
    }
}

/// The GPT-2 style byte-to-char table: printable bytes map to themselves,
/// the rest to codepoints starting at U+0100, so every byte has a visible
/// single-char spelling.
fn byte_alphabet() -> [char; 256] {
    let mut table = ['\0'; 256];
    let mut taken = [false; 256];
    let keep = |b: u8| {
        (b'!'..=b'~').contains(&b) || (0xA1..=0xAC).contains(&b) || (0xAE..=0xFF).contains(&b)
    };
    for b in 0..=255u8 {
        if keep(b) {
            table[b as usize] = char::from_u32(b as u32).unwrap();
            taken[b as usize] = true;
        }
    }
    let mut next = 0u32;
    for b in 0..=255u8 {
        if !taken[b as usize] {
            table[b as usize] = char::from_u32(256 + next).unwrap();
            next += 1;
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    /// Five-rule fixture: merges for ab, abc, Ġc, Ġa, bc over the bytes
    /// a, b, c plus the space symbol.
    fn fixture() -> (tempfile::TempDir, Tokenizer) {
        let dir = tempfile::tempdir().unwrap();
        let vocab_path = dir.path().join("vocab.json");
        let merges_path = dir.path().join("merges.txt");
        let mut vocab = std::fs::File::create(&vocab_path).unwrap();
        write!(
            vocab,
            r#"{{"a":0,"b":1,"c":2,"Ġ":3,"ab":4,"abc":5,"Ġc":6,"Ġa":7,"bc":8}}"#
        )
        .unwrap();
        let mut merges = std::fs::File::create(&merges_path).unwrap();
        write!(merges, "#version: 0.2\na b\nab c\nĠ c\nĠ a\nb c\n").unwrap();
        let spec = TokenizerSpec::ByteLevelBpe {
            vocab: vocab_path,
            merges: merges_path,
        };
        let tok = Tokenizer::load(&spec).unwrap();
        (dir, tok)
    }

    #[test]
    fn whitespace_counts_runs() {
        let tok = Tokenizer::Whitespace;
        assert_eq!(tok.count_tokens("a b  c").unwrap(), 3);
        assert_eq!(tok.count_tokens("").unwrap(), 0);
        assert_eq!(tok.count_tokens("  \t\n ").unwrap(), 0);
    }

    #[test]
    fn whitespace_ids_are_first_occurrence_stable() {
        let tok = Tokenizer::Whitespace;
        assert_eq!(tok.tokenize("a b a").unwrap(), vec![0, 1, 0]);
        assert_eq!(tok.tokenize("").unwrap(), Vec::<u32>::new());
    }

    // Hand-applied merge walk for the fixture:
    //   "abc"  -> [a,b,c] -(a b)-> [ab,c] -(ab c)-> [abc]          = 1 token
    //   "ab c" -> "ab":[a,b]->[ab]; " c":[Ġ,c]->[Ġc]               = 2 tokens
    #[test]
    fn fixture_merges_apply_in_rank_order() {
        let (_dir, tok) = fixture();
        assert_eq!(tok.count_tokens("abc").unwrap(), 1);
        assert_eq!(tok.count_tokens("ab c").unwrap(), 2);
        assert_eq!(tok.tokenize("abc").unwrap(), vec![5]);
        assert_eq!(tok.tokenize("ab c").unwrap(), vec![4, 6]);
        assert_eq!(tok.tokenize("").unwrap(), Vec::<u32>::new());
    }

    #[test]
    fn count_matches_tokenize_length() {
        let (_dir, tok) = fixture();
        for text in ["abc", "ab c", "a", "c b a", "  abc  ", "a  b   c"] {
            let ids = tok.tokenize(text).unwrap();
            assert_eq!(tok.count_tokens(text).unwrap() as usize, ids.len(), "{text:?}");
        }
    }

    #[test]
    fn unknown_symbol_is_an_error_for_tokenize() {
        let (_dir, tok) = fixture();
        assert!(matches!(
            tok.tokenize("xyz"),
            Err(TokenizerError::UnknownToken(_))
        ));
    }

    #[test]
    fn malformed_merge_line_reports_location() {
        let dir = tempfile::tempdir().unwrap();
        let vocab_path = dir.path().join("vocab.json");
        let merges_path = dir.path().join("merges.txt");
        std::fs::write(&vocab_path, "{}").unwrap();
        std::fs::write(&merges_path, "a b\none two three\n").unwrap();
        let spec = TokenizerSpec::ByteLevelBpe {
            vocab: vocab_path,
            merges: merges_path,
        };
        match Tokenizer::load(&spec) {
            Err(TokenizerError::MalformedVocab { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed vocab error, got {other:?}"),
        }
    }
}

impl std::fmt::Debug for Tokenizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::fmt::Debug for BpeTokenizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "BpeTokenizer {{ vocab: {}, merges: {} }}",
            self.vocab.len(),
            self.ranks.len()
        )
    }
}
