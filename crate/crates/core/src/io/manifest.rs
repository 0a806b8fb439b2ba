//! JSON manifests: the utterance→speaker sidecar map and the matching-set
//! manifest that drives pooled-target construction.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sidecar map from utterance id to speaker id. NPY files carry no
/// metadata, so speaker labels for embeddings travel in this file.
pub type SpeakerManifest = BTreeMap<String, String>;

/// One matching set: a pseudo-speaker label and the feature files whose
/// frames form its pool. `weight` feeds the pooled average; omitted
/// weights fall back to a uniform split.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TargetSetEntry {
    pub source_id: String,
    pub files: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

/// The manifest listing every matching set of a pooled target.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TargetManifest {
    pub sets: Vec<TargetSetEntry>,
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{}: invalid JSON: {e}", path.display())))
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Format(format!("JSON serialization failed: {e}")))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Writes JSON via a temp file + rename so readers never observe a
/// half-written manifest.
pub fn write_json_atomic<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let tmp = path.with_extension("json.tmp");
    write_json(value, &tmp)?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
