//! Run manifests for reproduced artifact sets.
//!
//! A manifest records everything needed to audit a run: the command line,
//! the master seed, the resolved scenario with per-key provenance, the
//! random substreams the run consumed, and a SHA-256 digest of every
//! artifact. Reruns with the same seed must reproduce the digests exactly,
//! regardless of thread count.

use std::path::Path;

use anyhow::Result;
use pacot_core::params::{config_entries, derived_entries, ConfigValue, Provenance, Scenario};
use pacot_core::rng::stream_id;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::FileConfig;

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: Vec<String>,
    pub master_seed: u64,
    pub threads: usize,
    pub duration_ms: u64,
    pub scenario: Vec<ParamRecord>,
    pub substreams: Vec<SubstreamRecord>,
    pub artifacts: Vec<ArtifactRecord>,
}

/// One resolved parameter with where its value came from.
#[derive(Debug, Serialize)]
pub struct ParamRecord {
    pub key: String,
    pub value: serde_json::Value,
    pub unit: String,
    pub provenance: String,
}

/// One random substream family a run consumed: the task label, the index
/// range, and the derived stream id of the first index as a spot check.
#[derive(Debug, Serialize)]
pub struct SubstreamRecord {
    pub task: String,
    pub first_index: u64,
    pub count: u64,
    pub first_stream_id: String,
}

impl SubstreamRecord {
    pub fn new(task: &str, first_index: u64, count: u64) -> Self {
        SubstreamRecord {
            task: task.to_string(),
            first_index,
            count,
            first_stream_id: format!("{:#018x}", stream_id(task, first_index)),
        }
    }
}

/// One written artifact with its content digest.
#[derive(Debug, Serialize)]
pub struct ArtifactRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl ArtifactRecord {
    pub fn for_content(path: &Path, content: &str) -> Self {
        ArtifactRecord {
            path: path.to_string_lossy().into_owned(),
            sha256: hex::encode(Sha256::digest(content.as_bytes())),
            bytes: content.len() as u64,
        }
    }
}

fn json_value(value: ConfigValue) -> serde_json::Value {
    match value {
        ConfigValue::Float(v) => serde_json::json!(v),
        ConfigValue::Integer(v) => serde_json::json!(v),
    }
}

fn provenance_label(provenance: &Provenance, file: &FileConfig) -> String {
    match provenance {
        Provenance::Default => "default".to_string(),
        Provenance::File { line } => match &file.path {
            Some(path) => format!("{}:{line}", path.display()),
            None => format!("line {line}"),
        },
        Provenance::Derived { rule } => format!("derived: {rule}"),
        Provenance::Constant => "constant".to_string(),
    }
}

/// The resolved scenario as manifest records: every configurable knob with
/// file provenance overlaid, followed by the derived quantities.
pub fn scenario_records(file: &FileConfig, scenario: &Scenario) -> Vec<ParamRecord> {
    let mut entries = config_entries(&scenario.config);
    for entry in &mut entries {
        if let Some(&line) = file.lines.get(entry.key.as_str()) {
            entry.provenance = Provenance::File { line };
        }
    }
    entries.extend(derived_entries(scenario));
    entries
        .into_iter()
        .map(|entry| ParamRecord {
            value: json_value(entry.value),
            provenance: provenance_label(&entry.provenance, file),
            key: entry.key,
            unit: entry.unit.to_string(),
        })
        .collect()
}

/// Serializes a manifest as pretty JSON with a trailing newline.
pub fn render(manifest: &Manifest) -> Result<String> {
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    Ok(text)
}
