//! Line-oriented text formats: trial lists, score files, transcripts,
//! token sequences, and gold/predicted label pairs. All files are UTF-8;
//! blank lines are ignored on read.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{Transcript, TrialEntry, TrialList};
use crate::metrics::TrialScore;

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.to_string()))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect())
}

fn parse_decision(field: &str, line_no: usize) -> Result<bool> {
    match field {
        "target" => Ok(true),
        "nontarget" => Ok(false),
        other => Err(Error::Schema(format!(
            "line {line_no}: expected 'target' or 'nontarget', got '{other}'"
        ))),
    }
}

/// Reads `<enroll_speaker_id> <test_utterance_id> <target|nontarget>`
/// lines, preserving file order.
pub fn read_trial_list(path: impl AsRef<Path>) -> Result<TrialList> {
    let path = path.as_ref();
    let mut entries = Vec::new();
    for (line_no, line) in read_lines(path)? {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [enroll, test, decision] = fields[..] else {
            return Err(Error::Format(format!(
                "line {line_no}: expected 3 fields, got {}",
                fields.len()
            )));
        };
        entries.push(TrialEntry {
            enroll_speaker_id: enroll.to_string(),
            test_utterance_id: test.to_string(),
            is_target: parse_decision(decision, line_no)?,
        });
    }
    TrialList::new(entries)
}

pub fn write_trial_list(list: &TrialList, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for e in &list.entries {
        let tag = if e.is_target { "target" } else { "nontarget" };
        out.push_str(&format!(
            "{} {} {tag}\n",
            e.enroll_speaker_id, e.test_utterance_id
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads `<enroll_speaker_id> <test_utterance_id> <score> <target|nontarget>`
/// lines.
pub fn read_score_file(path: impl AsRef<Path>) -> Result<Vec<TrialScore>> {
    let path = path.as_ref();
    let mut scores = Vec::new();
    for (line_no, line) in read_lines(path)? {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [enroll, test, score, decision] = fields[..] else {
            return Err(Error::Format(format!(
                "line {line_no}: expected 4 fields, got {}",
                fields.len()
            )));
        };
        let score: f64 = score.parse().map_err(|_| {
            Error::Schema(format!("line {line_no}: '{score}' is not a real number"))
        })?;
        if !score.is_finite() {
            return Err(Error::Data(format!("line {line_no}: score is not finite")));
        }
        scores.push(TrialScore {
            enroll_speaker_id: enroll.to_string(),
            test_utterance_id: test.to_string(),
            score,
            is_target: parse_decision(decision, line_no)?,
        });
    }
    Ok(scores)
}

pub fn write_score_file(scores: &[TrialScore], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for s in scores {
        let tag = if s.is_target { "target" } else { "nontarget" };
        out.push_str(&format!(
            "{} {} {} {tag}\n",
            s.enroll_speaker_id, s.test_utterance_id, s.score
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads `<utterance_id>\t<space-joined words>` lines. A line whose text
/// part is empty is a silent utterance.
pub fn read_transcript_file(path: impl AsRef<Path>) -> Result<Vec<Transcript>> {
    let path = path.as_ref();
    let mut transcripts = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (line_no, line) in read_lines(path)? {
        let (id, text) = line.split_once('\t').ok_or_else(|| {
            Error::Format(format!("line {line_no}: missing tab separator after utterance id"))
        })?;
        if !seen.insert(id.to_string()) {
            return Err(Error::Data(format!(
                "line {line_no}: duplicate utterance id '{id}'"
            )));
        }
        let words = text.split_whitespace().map(str::to_string).collect();
        transcripts.push(Transcript::new(id, words)?);
    }
    Ok(transcripts)
}

pub fn write_transcript_file(transcripts: &[Transcript], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for t in transcripts {
        out.push_str(&t.utterance_id);
        out.push('\t');
        out.push_str(&t.words.join(" "));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads one utterance's token sequence: whitespace-separated integers.
pub fn read_token_file(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.split_whitespace()
        .map(|tok| {
            tok.parse::<usize>()
                .map_err(|_| Error::Schema(format!("'{tok}' is not a token index")))
        })
        .collect()
}

pub fn write_token_file(tokens: &[usize], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let line = tokens
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(" ");
    fs::write(path, line + "\n").map_err(|e| Error::io(path, e))
}

/// Reads `<utterance_id> <gold_label> <predicted_label>` lines for UAR.
pub fn read_label_file(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    let mut pairs = Vec::new();
    for (line_no, line) in read_lines(path)? {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [_id, gold, pred] = fields[..] else {
            return Err(Error::Format(format!(
                "line {line_no}: expected 3 fields, got {}",
                fields.len()
            )));
        };
        pairs.push((gold.to_string(), pred.to_string()));
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn parses_target_line() {
        let dir = tmp();
        let path = dir.path().join("trials.txt");
        std::fs::write(&path, "spk1 utt9 target\n").unwrap();
        let list = read_trial_list(&path).unwrap();
        assert_eq!(
            list.entries,
            vec![TrialEntry {
                enroll_speaker_id: "spk1".into(),
                test_utterance_id: "utt9".into(),
                is_target: true,
            }]
        );
    }

    #[test]
    fn unknown_decision_is_schema_error() {
        let dir = tmp();
        let path = dir.path().join("trials.txt");
        std::fs::write(&path, "spk1 utt9 maybe\n").unwrap();
        assert!(matches!(
            read_trial_list(&path).unwrap_err(),
            Error::Schema(_)
        ));
    }

    #[test]
    fn wrong_field_count_is_format_error() {
        let dir = tmp();
        let path = dir.path().join("trials.txt");
        std::fs::write(&path, "spk1 utt9\n").unwrap();
        assert!(matches!(
            read_trial_list(&path).unwrap_err(),
            Error::Format(_)
        ));
    }

    #[test]
    fn duplicate_pair_is_data_error() {
        let dir = tmp();
        let path = dir.path().join("trials.txt");
        std::fs::write(&path, "spk1 utt9 target\nspk1 utt9 nontarget\n").unwrap();
        assert!(matches!(read_trial_list(&path).unwrap_err(), Error::Data(_)));
    }

    #[test]
    fn generated_file_preserves_order() {
        let dir = tmp();
        let path = dir.path().join("trials.txt");
        let entries: Vec<TrialEntry> = (0..50)
            .map(|i| TrialEntry {
                enroll_speaker_id: format!("spk{}", i % 7),
                test_utterance_id: format!("utt{i}"),
                is_target: i % 3 == 0,
            })
            .collect();
        write_trial_list(&TrialList::new(entries.clone()).unwrap(), &path).unwrap();
        let back = read_trial_list(&path).unwrap();
        assert_eq!(back.entries, entries);
    }

    #[test]
    fn score_file_roundtrip_is_exact() {
        let dir = tmp();
        let path = dir.path().join("scores.txt");
        let scores = vec![
            TrialScore {
                enroll_speaker_id: "a".into(),
                test_utterance_id: "u1".into(),
                score: 0.123456789012345,
                is_target: true,
            },
            TrialScore {
                enroll_speaker_id: "b".into(),
                test_utterance_id: "u2".into(),
                score: -1.0,
                is_target: false,
            },
        ];
        write_score_file(&scores, &path).unwrap();
        let back = read_score_file(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].score, scores[0].score);
        assert_eq!(back[1].score, scores[1].score);
        assert!(back[0].is_target && !back[1].is_target);
    }

    #[test]
    fn transcript_roundtrip_including_silent() {
        let dir = tmp();
        let path = dir.path().join("ref.txt");
        let ts = vec![
            Transcript::new("u1", vec!["hello".into(), "world".into()]).unwrap(),
            Transcript::new("u2", vec![]).unwrap(),
        ];
        write_transcript_file(&ts, &path).unwrap();
        let back = read_transcript_file(&path).unwrap();
        assert_eq!(back, ts);
    }

    #[test]
    fn duplicate_transcript_id_is_data_error() {
        let dir = tmp();
        let path = dir.path().join("ref.txt");
        std::fs::write(&path, "u1\ta b\nu1\tc\n").unwrap();
        assert!(matches!(
            read_transcript_file(&path).unwrap_err(),
            Error::Data(_)
        ));
    }

    #[test]
    fn token_file_roundtrip() {
        let dir = tmp();
        let path = dir.path().join("u.tokens");
        write_token_file(&[5, 2, 7, 0], &path).unwrap();
        assert_eq!(read_token_file(&path).unwrap(), vec![5, 2, 7, 0]);
    }
}
