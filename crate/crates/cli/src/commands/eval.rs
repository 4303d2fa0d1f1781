//! `eval`: BLEU / ROUGE-L / exact-match over aligned hypothesis and
//! reference files.

use std::collections::BTreeMap;
use std::path::Path;

use retrocorpus::metrics::{
    bleu_corpus, exact_match_rate, rouge_l_corpus, BleuOptions, EvalPair, METRIC_TOKENIZER,
};
use retrocorpus::report::{assemble_eval_report, EvalRecord};

use super::{data_err, read_eval_lines, write_json};
use crate::{CommandOutcome, Failure};

pub fn run(
    hyp_path: &Path,
    ref_path: &Path,
    metrics_arg: &str,
    out: &Path,
    system: &str,
    benchmark: &str,
) -> Result<CommandOutcome, Failure> {
    let requested: Vec<&str> = metrics_arg
        .split(',')
        .map(str::trim)
        .filter(|m| !m.is_empty())
        .collect();
    for metric in &requested {
        if !["bleu", "rouge-l", "exact"].contains(metric) {
            return Err(Failure::Config(format!(
                "unknown metric '{metric}' (expected bleu, rouge-l, exact)"
            )));
        }
    }

    let (hyp_lines, hyp_errors) = read_eval_lines(hyp_path)?;
    let (ref_lines, ref_errors) = read_eval_lines(ref_path)?;
    if hyp_lines.len() != ref_lines.len() {
        return Err(Failure::Data(format!(
            "hypothesis and reference files differ in length: {} vs {}",
            hyp_lines.len(),
            ref_lines.len()
        )));
    }

    let pairs: Vec<EvalPair> = hyp_lines
        .iter()
        .zip(&ref_lines)
        .map(|(hyp, reference)| {
            let mut refs = vec![reference.text.as_str()];
            refs.extend(reference.extra_refs.iter().map(String::as_str));
            EvalPair::new(&hyp.text, refs)
        })
        .collect::<Result<_, _>>()
        .map_err(data_err)?;

    let mut records = Vec::new();
    let base = |metric: &str| EvalRecord {
        system: system.to_string(),
        benchmark: benchmark.to_string(),
        metric: metric.to_string(),
        value: None,
        ci_low: None,
        ci_high: None,
        n: pairs.len() as u64,
        reason: None,
        metadata: BTreeMap::new(),
    };
    for metric in &requested {
        match *metric {
            "bleu" => {
                let result = bleu_corpus(&pairs, BleuOptions::default()).map_err(data_err)?;
                let mut record = base("bleu");
                record.value = Some(result.value);
                record.metadata = result.metadata;
                records.push(record);
            }
            "rouge-l" => {
                let result = rouge_l_corpus(&pairs, 1.2).map_err(data_err)?;
                let mut record = base("rouge-l");
                record.value = Some(result.value);
                record.ci_low = result.ci_low;
                record.ci_high = result.ci_high;
                record.metadata = result.metadata;
                records.push(record);
            }
            "exact" => {
                let mut record = base("exact");
                record.value = Some(exact_match_rate(&pairs));
                record
                    .metadata
                    .insert("tokenizer".to_string(), METRIC_TOKENIZER.to_string());
                records.push(record);
            }
            _ => unreachable!("validated above"),
        }
    }

    let report = assemble_eval_report(records);
    write_json(out, &report)?;
    log::info!("eval: {} pairs, {} metrics -> {}", pairs.len(), requested.len(), out.display());

    let error_count = (hyp_errors.len() + ref_errors.len()) as u64;
    let mut summary = BTreeMap::new();
    summary.insert("pairs".to_string(), (pairs.len() as u64).into());
    summary.insert("metrics".to_string(), serde_json::to_value(&requested).unwrap());
    summary.insert("error_rows".to_string(), error_count.into());

    Ok(CommandOutcome {
        inputs: vec![hyp_path.to_path_buf(), ref_path.to_path_buf()],
        outputs: vec![out.to_path_buf()],
        primary: out.to_path_buf(),
        effective_config: serde_json::json!({
            "metrics": requested,
            "system": system,
            "benchmark": benchmark,
        }),
        summary,
        data_errors: error_count,
    })
}
