//! Declarative pipeline configuration: stage toggles and parameters for
//! every filter stage, the tokenizer, and optionally a translation
//! backend, parsed from a single TOML file. Every referenced file path
//! is checked at load time.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::filters::{
    BoilerplateThresholds, CharsetPolicy, FilterSettings, PatternBlocklist, StageToggles,
    StopwordSet,
};
use crate::tokenize::TokenizerSpec;
use crate::translate::BackendSpec;

fn enabled_default() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BoilerplateSection {
    #[serde(default = "enabled_default")]
    pub enabled: bool,
    #[serde(flatten)]
    pub thresholds: BoilerplateThresholds,
    /// Optional stopword list path; the bundled list is used otherwise.
    pub stopwords: Option<PathBuf>,
}

impl Default for BoilerplateSection {
    fn default() -> Self {
        BoilerplateSection {
            enabled: true,
            thresholds: BoilerplateThresholds::default(),
            stopwords: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ToggleSection {
    #[serde(default = "enabled_default")]
    pub enabled: bool,
}

impl Default for ToggleSection {
    fn default() -> Self {
        ToggleSection { enabled: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CharsetSection {
    #[serde(default = "enabled_default")]
    pub enabled: bool,
    #[serde(flatten)]
    pub policy: CharsetPolicy,
}

impl Default for CharsetSection {
    fn default() -> Self {
        CharsetSection {
            enabled: true,
            policy: CharsetPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PatternsSection {
    #[serde(default = "enabled_default")]
    pub enabled: bool,
    /// Literal prefixes; when neither this nor `blocklist` is given the
    /// stock blocklist applies.
    pub prefixes: Option<Vec<String>>,
    pub regexes: Option<Vec<String>>,
    /// Optional TOML file with `prefixes`/`regexes` arrays, merged in.
    pub blocklist: Option<PathBuf>,
}

impl Default for PatternsSection {
    fn default() -> Self {
        PatternsSection {
            enabled: true,
            prefixes: None,
            regexes: None,
            blocklist: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LengthSection {
    #[serde(default = "enabled_default")]
    pub enabled: bool,
    pub max_total_tokens: u64,
}

impl Default for LengthSection {
    fn default() -> Self {
        LengthSection {
            enabled: true,
            max_total_tokens: 900,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
struct BlocklistFile {
    #[serde(default)]
    prefixes: Vec<String>,
    #[serde(default)]
    regexes: Vec<String>,
}

/// The whole pipeline configuration file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub tokenizer: Option<TokenizerSpec>,
    pub backend: Option<BackendSpec>,
    pub boilerplate: BoilerplateSection,
    pub duplicates: ToggleSection,
    pub invalid_chars: CharsetSection,
    pub patterns: PatternsSection,
    pub length: LengthSection,
    pub misc: ToggleSection,
}

impl PipelineConfig {
    /// Parses and validates a config file. Relative paths inside the
    /// file resolve against the file's directory.
    pub fn load(path: &Path) -> Result<PipelineConfig, ConfigError> {
        let raw = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: PipelineConfig = toml::from_str(&raw).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        config.resolve_paths(&base);
        config.validate()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&p);
            }
        };
        if let Some(p) = &mut self.boilerplate.stopwords {
            rebase(p);
        }
        if let Some(p) = &mut self.patterns.blocklist {
            rebase(p);
        }
        if let Some(TokenizerSpec::ByteLevelBpe { vocab, merges }) = &mut self.tokenizer {
            rebase(vocab);
            rebase(merges);
        }
        if let Some(backend) = &mut self.backend {
            if let Some(p) = &mut backend.table_path {
                rebase(p);
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.boilerplate.thresholds.validate()?;
        if self.length.max_total_tokens == 0 {
            return Err(ConfigError::Invalid(
                "length.max_total_tokens must be positive".to_string(),
            ));
        }
        for path in [
            self.boilerplate.stopwords.as_ref(),
            self.patterns.blocklist.as_ref(),
        ]
        .into_iter()
        .flatten()
        {
            if !path.exists() {
                return Err(ConfigError::MissingPath(path.clone()));
            }
        }
        if let Some(TokenizerSpec::ByteLevelBpe { vocab, merges }) = &self.tokenizer {
            for path in [vocab, merges] {
                if !path.exists() {
                    return Err(ConfigError::MissingPath(path.clone()));
                }
            }
        }
        if let Some(backend) = &self.backend {
            backend.validate()?;
        }
        Ok(())
    }

    /// Compiles the config into runnable filter settings (stopwords
    /// read, blocklist regexes compiled).
    pub fn filter_settings(&self) -> Result<FilterSettings, ConfigError> {
        let stopwords = match &self.boilerplate.stopwords {
            Some(path) => StopwordSet::from_path(path)?,
            None => StopwordSet::default_target_variety(),
        };

        let mut prefixes = self.patterns.prefixes.clone();
        let mut regex_sources = self.patterns.regexes.clone();
        if let Some(path) = &self.patterns.blocklist {
            let raw = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
                path: path.clone(),
                source,
            })?;
            let file: BlocklistFile = toml::from_str(&raw).map_err(|e| ConfigError::Parse {
                path: path.clone(),
                message: e.to_string(),
            })?;
            prefixes.get_or_insert_with(Vec::new).extend(file.prefixes);
            regex_sources.get_or_insert_with(Vec::new).extend(file.regexes);
        }
        let blocklist = match (prefixes, regex_sources) {
            (None, None) => PatternBlocklist::default_blocklist(),
            (p, r) => PatternBlocklist::compile(p.unwrap_or_default(), &r.unwrap_or_default())?,
        };

        let settings = FilterSettings {
            toggles: StageToggles {
                boilerplate: self.boilerplate.enabled,
                duplicates: self.duplicates.enabled,
                invalid_chars: self.invalid_chars.enabled,
                patterns: self.patterns.enabled,
                length: self.length.enabled,
                misc: self.misc.enabled,
            },
            boilerplate: self.boilerplate.thresholds,
            stopwords,
            charset: self.invalid_chars.policy.clone(),
            blocklist,
            max_total_tokens: self.length.max_total_tokens,
        };
        settings.validate()?;
        Ok(settings)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn defaults_enable_every_stage() {
        let config = PipelineConfig::default();
        let settings = config.filter_settings().unwrap();
        let t = settings.toggles;
        assert!(
            t.boilerplate && t.duplicates && t.invalid_chars && t.patterns && t.length && t.misc
        );
        assert_eq!(settings.max_total_tokens, 900);
        assert_eq!(settings.blocklist.prefixes.len(), 2);
        assert!(!settings.stopwords.is_empty());
    }

    #[test]
    fn load_rejects_missing_referenced_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.toml");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "[boilerplate]\nstopwords = \"nope.txt\"").unwrap();
        assert!(matches!(
            PipelineConfig::load(&path),
            Err(ConfigError::MissingPath(_))
        ));
    }

    #[test]
    fn load_rejects_zero_token_cap() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.toml");
        std::fs::write(&path, "[length]\nmax_total_tokens = 0\n").unwrap();
        assert!(matches!(
            PipelineConfig::load(&path),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn stage_sections_parse_and_toggle() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.toml");
        std::fs::write(
            &path,
            concat!(
                "[tokenizer]\nkind = \"whitespace\"\n",
                "[boilerplate]\nenabled = false\nlength_low = 10\n",
                "[patterns]\nprefixes = [\"Spam:\"]\n",
                "[length]\nmax_total_tokens = 100\n",
            ),
        )
        .unwrap();
        let config = PipelineConfig::load(&path).unwrap();
        let settings = config.filter_settings().unwrap();
        assert!(!settings.toggles.boilerplate);
        assert_eq!(settings.boilerplate.length_low, 10);
        assert_eq!(settings.blocklist.prefixes, vec!["Spam:".to_string()]);
        assert_eq!(settings.max_total_tokens, 100);
    }
}
