//! Run manifests: one JSON file written atomically beside each command's
//! primary output, recording what ran, over which files, with which
//! configuration (as a stable hash), and a per-stage summary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config_hash: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub summary: BTreeMap<String, serde_json::Value>,
}

/// Recursively sorts object keys so identical configs hash identically
/// no matter how they were assembled.
fn canonicalize(value: &serde_json::Value) -> serde_json::Value {
    match value {
        serde_json::Value::Object(map) => {
            let sorted: BTreeMap<&String, serde_json::Value> =
                map.iter().map(|(k, v)| (k, canonicalize(v))).collect();
            serde_json::to_value(sorted).expect("canonical map serializes")
        }
        serde_json::Value::Array(items) => {
            serde_json::Value::Array(items.iter().map(canonicalize).collect())
        }
        other => other.clone(),
    }
}

pub fn config_hash(effective_config: &serde_json::Value) -> String {
    let canonical = canonicalize(effective_config).to_string();
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Where the manifest for a given primary output lives.
pub fn manifest_path(primary_output: &Path) -> PathBuf {
    let mut name = primary_output
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".to_string());
    name.push_str(".manifest.json");
    primary_output.with_file_name(name)
}

/// Writes the manifest via a temp file and rename.
pub fn write_manifest(manifest: &RunManifest, primary_output: &Path) -> std::io::Result<PathBuf> {
    let path = manifest_path(primary_output);
    let tmp = path.with_extension("json.tmp");
    let json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    std::fs::write(&tmp, json)?;
    std::fs::rename(&tmp, &path)?;
    Ok(path)
}
