//! `vid train` / `vid score`: the language-variety classifier and the
//! variety-fidelity ratio.

use std::collections::BTreeMap;
use std::path::Path;

use retrocorpus::corpus::Variety;
use retrocorpus::error::VarietyError;
use retrocorpus::variety::{train_classifier, vid_score, VarietyModel};

use super::{
    config_err, data_err, eval_line_to_document, read_documents_soft, read_eval_lines, write_json,
};
use crate::{CommandOutcome, Failure};

pub fn train(input: &Path, model_path: &Path, alpha: f64) -> Result<CommandOutcome, Failure> {
    if !(alpha > 0.0) {
        return Err(Failure::Config(format!(
            "--alpha must be positive, got {alpha}"
        )));
    }
    let (docs, line_errors) = read_documents_soft(input)?;

    // Only the two binary labels train the model; everything else is
    // reported as skipped rather than guessed.
    let mut train_docs = Vec::new();
    let mut skipped_by_label: BTreeMap<String, u64> = BTreeMap::new();
    for doc in docs {
        match doc.variety {
            Variety::TargetVariety | Variety::OtherVariety => train_docs.push(doc),
            other => {
                *skipped_by_label.entry(other.to_string()).or_insert(0) += 1;
            }
        }
    }

    let model = train_classifier(&train_docs, alpha).map_err(data_err)?;
    model.save(model_path).map_err(data_err)?;
    log::info!(
        "vid train: {} documents -> model with {} features",
        train_docs.len(),
        model.vocabulary.len()
    );

    let mut summary = BTreeMap::new();
    summary.insert("trained_on".to_string(), (train_docs.len() as u64).into());
    summary.insert(
        "skipped_by_label".to_string(),
        serde_json::to_value(&skipped_by_label).unwrap(),
    );
    summary.insert("features".to_string(), (model.vocabulary.len() as u64).into());
    summary.insert("error_rows".to_string(), (line_errors.len() as u64).into());

    Ok(CommandOutcome {
        inputs: vec![input.to_path_buf()],
        outputs: vec![model_path.to_path_buf()],
        primary: model_path.to_path_buf(),
        effective_config: serde_json::json!({ "alpha": alpha }),
        summary,
        data_errors: line_errors.len() as u64,
    })
}

pub fn score(
    hyp_path: &Path,
    ref_path: &Path,
    model_path: &Path,
    out: &Path,
) -> Result<CommandOutcome, Failure> {
    let model = VarietyModel::load(model_path).map_err(config_err)?;
    let (hyp_lines, hyp_errors) = read_eval_lines(hyp_path)?;
    let (ref_lines, ref_errors) = read_eval_lines(ref_path)?;

    let hyp_docs: Vec<_> = hyp_lines.iter().map(eval_line_to_document).collect();
    let ref_docs: Vec<_> = ref_lines.iter().map(eval_line_to_document).collect();

    // An undefined VID still reports both percentages; anything else is
    // a hard data error.
    let (report, undefined) = match vid_score(&hyp_docs, &ref_docs, &model) {
        Ok(result) => (
            serde_json::json!({
                "n": hyp_docs.len(),
                "pct_target_hyp": result.pct_target_hyp,
                "pct_target_ref": result.pct_target_ref,
                "vid": result.vid,
            }),
            false,
        ),
        Err(VarietyError::Undefined { pct_hyp, pct_ref }) => (
            serde_json::json!({
                "n": hyp_docs.len(),
                "pct_target_hyp": pct_hyp,
                "pct_target_ref": pct_ref,
                "vid": null,
                "reason": "undefined: no reference document classified as the target variety",
            }),
            true,
        ),
        Err(e) => return Err(data_err(e)),
    };
    write_json(out, &report)?;
    log::info!("vid score: {} -> {}", hyp_docs.len(), out.display());

    let error_count = (hyp_errors.len() + ref_errors.len()) as u64 + u64::from(undefined);
    let mut summary = BTreeMap::new();
    summary.insert("pairs".to_string(), (hyp_docs.len() as u64).into());
    summary.insert("result".to_string(), report);
    summary.insert(
        "error_rows".to_string(),
        ((hyp_errors.len() + ref_errors.len()) as u64).into(),
    );

    let model_digest = {
        use sha2::{Digest, Sha256};
        let bytes = std::fs::read(model_path).map_err(data_err)?;
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect::<String>()
    };

    Ok(CommandOutcome {
        inputs: vec![hyp_path.to_path_buf(), ref_path.to_path_buf(), model_path.to_path_buf()],
        outputs: vec![out.to_path_buf()],
        primary: out.to_path_buf(),
        effective_config: serde_json::json!({ "model_sha256": model_digest }),
        summary,
        data_errors: error_count,
    })
}
