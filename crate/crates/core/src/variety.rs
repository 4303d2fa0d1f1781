//! Two-class language-variety identification and the variety-fidelity
//! (VID) score.
//!
//! The in-repo classifier is a multinomial naive Bayes over character
//! n-grams (n = 1..4) and word unigrams with Laplace smoothing: quick to
//! train, fully deterministic, and strong enough for the lexical and
//! orthographic cues that separate varieties. Systems with a stronger
//! external classifier can swap it in behind the same label interface.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{normalize_text, Document, Variety};
use crate::error::VarietyError;

const MODEL_FORMAT: &str = "variety-model/1";
const CHAR_NGRAM_MAX: usize = 4;

/// Multinomial naive Bayes model over the two variety classes.
///
/// Feature log-likelihoods form a proper distribution over the smoothed
/// vocabulary for each class; features unseen at training time are
/// ignored at inference.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VarietyModel {
    pub format: String,
    pub alpha: f64,
    pub log_prior_target: f64,
    pub log_prior_other: f64,
    /// Sorted feature vocabulary; indexes the likelihood vectors.
    pub vocabulary: Vec<String>,
    pub log_lik_target: Vec<f64>,
    pub log_lik_other: Vec<f64>,
    pub metadata: BTreeMap<String, String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

/// Classifier output labels (the model is strictly binary).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarietyLabel {
    TargetVariety,
    OtherVariety,
}

/// The VID score and the two percentages it is the ratio of.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VidResult {
    pub pct_target_hyp: f64,
    pub pct_target_ref: f64,
    pub vid: f64,
}

/// Feature extraction: lowercase, then character n-grams (`c:`-prefixed)
/// for n = 1..4 and word unigrams (`w:`-prefixed), multinomial counts.
fn feature_counts(text: &str) -> HashMap<String, u64> {
    let lowered = normalize_text(text).to_lowercase();
    let mut counts: HashMap<String, u64> = HashMap::new();
    let chars: Vec<char> = lowered.chars().collect();
    for n in 1..=CHAR_NGRAM_MAX {
        if chars.len() < n {
            break;
        }
        for window in chars.windows(n) {
            let mut key = String::with_capacity(n + 2);
            key.push_str("c:");
            key.extend(window.iter());
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    for word in lowered.split_whitespace() {
        *counts.entry(format!("w:{word}")).or_insert(0) += 1;
    }
    counts
}

/// Trains the classifier on documents labeled `target-variety` or
/// `other-variety`. Counting is order-independent, so the model is
/// deterministic for any permutation of the input.
pub fn train_classifier(docs: &[Document], alpha: f64) -> Result<VarietyModel, VarietyError> {
    let mut target_counts: HashMap<String, u64> = HashMap::new();
    let mut other_counts: HashMap<String, u64> = HashMap::new();
    let mut n_target = 0u64;
    let mut n_other = 0u64;

    for doc in docs {
        let bucket = match doc.variety {
            Variety::TargetVariety => {
                n_target += 1;
                &mut target_counts
            }
            Variety::OtherVariety => {
                n_other += 1;
                &mut other_counts
            }
            other => {
                return Err(VarietyError::BadLabel {
                    id: doc.id.clone(),
                    label: other.to_string(),
                })
            }
        };
        for (feature, count) in feature_counts(&doc.text) {
            *bucket.entry(feature).or_insert(0) += count;
        }
    }

    if n_target == 0 {
        return Err(VarietyError::EmptyClass("target-variety".to_string()));
    }
    if n_other == 0 {
        return Err(VarietyError::EmptyClass("other-variety".to_string()));
    }

    let vocabulary: Vec<String> = target_counts
        .keys()
        .chain(other_counts.keys())
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let vocab_size = vocabulary.len() as f64;

    let total_target: u64 = target_counts.values().sum();
    let total_other: u64 = other_counts.values().sum();
    let likelihoods = |counts: &HashMap<String, u64>, total: u64| -> Vec<f64> {
        let denominator = total as f64 + alpha * vocab_size;
        vocabulary
            .iter()
            .map(|f| {
                let count = counts.get(f).copied().unwrap_or(0) as f64;
                ((count + alpha) / denominator).ln()
            })
            .collect()
    };

    let log_lik_target = likelihoods(&target_counts, total_target);
    let log_lik_other = likelihoods(&other_counts, total_other);

    let n_docs = (n_target + n_other) as f64;
    let mut metadata = BTreeMap::new();
    metadata.insert("features".to_string(), "char-ngram-1..4+word-unigram".to_string());
    metadata.insert("n_target_docs".to_string(), n_target.to_string());
    metadata.insert("n_other_docs".to_string(), n_other.to_string());

    let mut model = VarietyModel {
        format: MODEL_FORMAT.to_string(),
        alpha,
        log_prior_target: (n_target as f64 / n_docs).ln(),
        log_prior_other: (n_other as f64 / n_docs).ln(),
        vocabulary,
        log_lik_target,
        log_lik_other,
        metadata,
        index: HashMap::new(),
    };
    model.rebuild_index();
    Ok(model)
}

impl VarietyModel {
    fn rebuild_index(&mut self) {
        self.index = self
            .vocabulary
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i))
            .collect();
    }

    /// Joint log-likelihood difference target minus other. Features are
    /// summed in sorted order so the result is bit-deterministic.
    fn log_odds(&self, text: &str) -> Result<f64, VarietyError> {
        let counts: BTreeMap<String, u64> = feature_counts(text).into_iter().collect();
        if counts.is_empty() {
            return Err(VarietyError::EmptyText(String::new()));
        }
        let mut target = self.log_prior_target;
        let mut other = self.log_prior_other;
        for (feature, count) in counts {
            if let Some(&idx) = self.index.get(&feature) {
                target += count as f64 * self.log_lik_target[idx];
                other += count as f64 * self.log_lik_other[idx];
            }
        }
        Ok(target - other)
    }

    pub fn save(&self, path: &Path) -> Result<(), VarietyError> {
        let json = serde_json::to_string(self).map_err(|e| VarietyError::Malformed(e.to_string()))?;
        std::fs::write(path, json).map_err(|source| VarietyError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<VarietyModel, VarietyError> {
        let raw = std::fs::read_to_string(path).map_err(|source| VarietyError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut model: VarietyModel =
            serde_json::from_str(&raw).map_err(|e| VarietyError::Malformed(e.to_string()))?;
        if model.format != MODEL_FORMAT {
            return Err(VarietyError::Malformed(format!(
                "unsupported model format '{}'",
                model.format
            )));
        }
        let expected = model.vocabulary.len();
        if model.log_lik_target.len() != expected || model.log_lik_other.len() != expected {
            return Err(VarietyError::Malformed(
                "likelihood vectors do not match the vocabulary".to_string(),
            ));
        }
        model.rebuild_index();
        Ok(model)
    }
}

/// Labels a document; ties break toward the target variety (the same
/// rule is applied to hypotheses and references, so the bias cancels in
/// the VID ratio).
pub fn classify(doc: &Document, model: &VarietyModel) -> Result<(VarietyLabel, f64), VarietyError> {
    let odds = model.log_odds(&doc.text).map_err(|e| match e {
        VarietyError::EmptyText(_) => VarietyError::EmptyText(doc.id.clone()),
        other => other,
    })?;
    let label = if odds >= 0.0 {
        VarietyLabel::TargetVariety
    } else {
        VarietyLabel::OtherVariety
    };
    Ok((label, odds))
}

/// Computes the VID score: the fraction of hypothesis documents labeled
/// as the target variety over the same fraction for the references.
/// Undefined when no reference is labeled target.
pub fn vid_score(
    hyp_docs: &[Document],
    ref_docs: &[Document],
    model: &VarietyModel,
) -> Result<VidResult, VarietyError> {
    if hyp_docs.len() != ref_docs.len() {
        return Err(VarietyError::LengthMismatch {
            left: hyp_docs.len(),
            right: ref_docs.len(),
        });
    }
    for (h, r) in hyp_docs.iter().zip(ref_docs) {
        if h.id != r.id {
            return Err(VarietyError::Misaligned(h.id.clone()));
        }
    }

    let pct_target = |docs: &[Document]| -> Result<f64, VarietyError> {
        let mut hits = 0u64;
        for doc in docs {
            if classify(doc, model)?.0 == VarietyLabel::TargetVariety {
                hits += 1;
            }
        }
        Ok(hits as f64 / docs.len() as f64)
    };

    let pct_target_hyp = pct_target(hyp_docs)?;
    let pct_target_ref = pct_target(ref_docs)?;
    if pct_target_ref == 0.0 {
        return Err(VarietyError::Undefined {
            pct_hyp: pct_target_hyp,
            pct_ref: pct_target_ref,
        });
    }
    Ok(VidResult {
        pct_target_hyp,
        pct_target_ref,
        vid: pct_target_hyp / pct_target_ref,
    })
}
