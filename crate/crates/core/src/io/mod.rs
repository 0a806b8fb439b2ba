//! On-disk artifacts: NPY feature/embedding matrices, trial lists, score
//! files, transcripts, token sequences, and JSON manifests.
//!
//! Every reader/writer pair round-trips exactly — bitwise for binary
//! formats, field-wise for text — and readers never hand back a
//! partially-parsed object. Real numbers always serialize with a `.`
//! decimal separator regardless of locale.

mod manifest;
mod npy;
mod text;

pub use manifest::{
    read_json, write_json, write_json_atomic, SpeakerManifest, TargetManifest, TargetSetEntry,
};
pub use npy::{
    read_embedding_file, read_feature_file, read_matrix_npy, read_vector_npy,
    write_embedding_file, write_feature_file, write_matrix_npy, write_vector_npy,
};
pub use text::{
    read_label_file, read_score_file, read_token_file, read_transcript_file, read_trial_list,
    write_score_file, write_token_file, write_transcript_file, write_trial_list,
};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// One utterance's frame matrix: T frames of D feature units each.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    pub utterance_id: String,
    pub frames: Matrix<f32>,
}

impl FeatureSequence {
    /// Validates T ≥ 1, D ≥ 1 (enforced by `Matrix`) and finite entries.
    pub fn new(utterance_id: impl Into<String>, frames: Matrix<f32>) -> Result<Self> {
        if !frames.all_finite() {
            return Err(Error::Data(
                "feature sequence contains non-finite values".into(),
            ));
        }
        Ok(FeatureSequence {
            utterance_id: utterance_id.into(),
            frames,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.rows()
    }

    pub fn is_empty(&self) -> bool {
        false // T >= 1 holds by construction
    }

    pub fn dim(&self) -> usize {
        self.frames.cols()
    }
}

/// A fixed-length utterance embedding, optionally tagged with its speaker.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub utterance_id: String,
    pub speaker_id: Option<String>,
    pub vector: Vec<f32>,
}

impl Embedding {
    /// Validates E ≥ 1, finite entries, and a nonzero vector (cosine
    /// against the zero vector is undefined).
    pub fn new(
        utterance_id: impl Into<String>,
        speaker_id: Option<String>,
        vector: Vec<f32>,
    ) -> Result<Self> {
        if vector.is_empty() {
            return Err(Error::Schema("embedding must have at least one entry".into()));
        }
        if !vector.iter().all(|v| v.is_finite()) {
            return Err(Error::Data("embedding contains non-finite values".into()));
        }
        if vector.iter().all(|&v| v == 0.0) {
            return Err(Error::Data("embedding is the all-zeros vector".into()));
        }
        Ok(Embedding {
            utterance_id: utterance_id.into(),
            speaker_id,
            vector,
        })
    }
}

/// One speaker-verification trial: an enrollment speaker, a test
/// utterance, and whether they truly match.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialEntry {
    pub enroll_speaker_id: String,
    pub test_utterance_id: String,
    pub is_target: bool,
}

/// An ordered list of trials with no duplicate (speaker, utterance) pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialList {
    pub entries: Vec<TrialEntry>,
}

impl TrialList {
    pub fn new(entries: Vec<TrialEntry>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for e in &entries {
            if !seen.insert((e.enroll_speaker_id.clone(), e.test_utterance_id.clone())) {
                return Err(Error::Data(format!(
                    "duplicate trial pair ({}, {})",
                    e.enroll_speaker_id, e.test_utterance_id
                )));
            }
        }
        Ok(TrialList { entries })
    }
}

/// The word sequence of one utterance. May be empty (a silent utterance);
/// individual words are never empty and contain no whitespace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub utterance_id: String,
    pub words: Vec<String>,
}

impl Transcript {
    pub fn new(utterance_id: impl Into<String>, words: Vec<String>) -> Result<Self> {
        for w in &words {
            if w.is_empty() {
                return Err(Error::Data("transcript contains an empty word".into()));
            }
            if w.chars().any(char::is_whitespace) {
                return Err(Error::Data(format!("word '{w}' contains whitespace")));
            }
        }
        Ok(Transcript {
            utterance_id: utterance_id.into(),
            words,
        })
    }
}

pub(crate) fn file_stem(path: &std::path::Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}
