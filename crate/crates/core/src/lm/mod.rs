//! Sentence scoring: an interpolated Kneser-Ney n-gram model trained here,
//! and score files produced by external (e.g. neural) models, behind one
//! [`SentenceScorer`] contract. All log-probabilities are natural logs and
//! include the end-of-sentence term.
//!
//! Score files hold one JSON object per line:
//! `{"sentence_id": "...", "total_logprob": -12.5, "token_count": 4, "token_logprobs": [...]}`
//! where `token_logprobs` is optional and `token_count` counts the end marker.

mod kn;

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use kn::{NgramModel, DEFAULT_DISCOUNT, MODEL_HEADER};

#[derive(Debug, Error)]
pub enum LmError {
    #[error("order must be in 1..=5, got {0}")]
    Order(usize),
    #[error("discount must be in (0, 1), got {0}")]
    Discount(f64),
    #[error("expected {expected} discounts (one per level) or 1, got {found}")]
    DiscountCount { expected: usize, found: usize },
    #[error("empty training corpus")]
    EmptyCorpus,
    #[error("cannot score an empty sentence")]
    EmptySentence,
    #[error("model file line {line}: {message}")]
    ModelFile { line: usize, message: String },
    #[error("score file line {line}: {message}")]
    ScoreRecord { line: usize, message: String },
    #[error("duplicate sentence id {0:?}")]
    DuplicateId(String),
    #[error("no score for sentence {0:?}")]
    MissingScore(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceScore {
    pub sentence_id: String,
    pub total_logprob: f64,
    /// Tokens scored, end marker included.
    pub token_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_logprobs: Option<Vec<f64>>,
}

impl SentenceScore {
    pub fn from_token_logprobs(id: &str, lps: Vec<f64>) -> Self {
        SentenceScore {
            sentence_id: id.to_string(),
            total_logprob: lps.iter().sum(),
            token_count: lps.len(),
            token_logprobs: Some(lps),
        }
    }

    fn check(&self) -> Result<(), String> {
        if self.sentence_id.is_empty() {
            return Err("empty sentence_id".into());
        }
        if !self.total_logprob.is_finite() {
            return Err(format!(
                "non-finite total_logprob for {:?}",
                self.sentence_id
            ));
        }
        if self.total_logprob > 0.0 {
            return Err(format!("positive total_logprob for {:?}", self.sentence_id));
        }
        if self.token_count == 0 {
            return Err(format!("zero token_count for {:?}", self.sentence_id));
        }
        if let Some(lps) = &self.token_logprobs {
            if lps.iter().any(|x| !x.is_finite()) {
                return Err(format!(
                    "non-finite token logprob for {:?}",
                    self.sentence_id
                ));
            }
            if lps.len() != self.token_count {
                return Err(format!(
                    "token_logprobs length differs from token_count for {:?}",
                    self.sentence_id
                ));
            }
            let sum: f64 = lps.iter().sum();
            if (sum - self.total_logprob).abs() > 1e-6 * self.total_logprob.abs().max(1.0) {
                return Err(format!(
                    "total_logprob is not the sum of token_logprobs for {:?}",
                    self.sentence_id
                ));
            }
        }
        Ok(())
    }
}

/// Anything that can assign a log-probability to a tokenized sentence.
/// `id` lets table-backed scorers look sentences up; models ignore it.
pub trait SentenceScorer: Sync {
    fn score(&self, id: &str, tokens: &[&str]) -> Result<SentenceScore, LmError>;
}

/// Every token, end marker included, has probability `1 / size`.
#[derive(Debug, Clone, Copy)]
pub struct UniformScorer {
    pub size: usize,
}

impl SentenceScorer for UniformScorer {
    fn score(&self, id: &str, tokens: &[&str]) -> Result<SentenceScore, LmError> {
        if tokens.is_empty() {
            return Err(LmError::EmptySentence);
        }
        let lp = -(self.size as f64).ln();
        Ok(SentenceScore::from_token_logprobs(
            id,
            vec![lp; tokens.len() + 1],
        ))
    }
}

/// Precomputed scores keyed by sentence id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable(pub BTreeMap<String, SentenceScore>);

impl ScoreTable {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&SentenceScore> {
        self.0.get(id)
    }
}

impl SentenceScorer for ScoreTable {
    fn score(&self, id: &str, _tokens: &[&str]) -> Result<SentenceScore, LmError> {
        self.0
            .get(id)
            .cloned()
            .ok_or_else(|| LmError::MissingScore(id.to_string()))
    }
}

pub fn load_scores<R: BufRead>(reader: R) -> Result<ScoreTable, LmError> {
    let mut out = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = |message: String| LmError::ScoreRecord {
            line: i + 1,
            message,
        };
        let s: SentenceScore = serde_json::from_str(&line).map_err(|e| rec(e.to_string()))?;
        s.check().map_err(rec)?;
        if out.contains_key(&s.sentence_id) {
            return Err(LmError::DuplicateId(s.sentence_id));
        }
        out.insert(s.sentence_id.clone(), s);
    }
    Ok(ScoreTable(out))
}

pub fn write_scores<W: Write>(mut w: W, scores: &[SentenceScore]) -> io::Result<()> {
    for s in scores {
        serde_json::to_writer(&mut w, s)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// `exp(-Σ logprob / Σ token_count)` pooled over all sentences.
pub fn perplexity_of(scores: &[SentenceScore]) -> Result<f64, LmError> {
    let count: usize = scores.iter().map(|s| s.token_count).sum();
    if count == 0 {
        return Err(LmError::EmptyCorpus);
    }
    let total: f64 = scores.iter().map(|s| s.total_logprob).sum();
    Ok((-total / count as f64).exp())
}

/// Perplexity of `scorer` on whitespace-tokenized lines (blank lines skipped;
/// ids are the 0-based line numbers).
pub fn perplexity<S: AsRef<str>>(scorer: &dyn SentenceScorer, lines: &[S]) -> Result<f64, LmError> {
    let mut scores = Vec::new();
    for (i, l) in lines.iter().enumerate() {
        let tokens: Vec<&str> = l.as_ref().split_whitespace().collect();
        if !tokens.is_empty() {
            scores.push(scorer.score(&i.to_string(), &tokens)?);
        }
    }
    perplexity_of(&scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_vocab;

    #[test]
    fn uniform_perplexity_is_vocab_size() {
        for v in [1usize, 7, 50_002] {
            let p = perplexity(&UniformScorer { size: v }, &["a b c", "d", "e f g h i"]).unwrap();
            assert!((p / v as f64 - 1.0).abs() < 1e-9);
        }
        assert!(matches!(
            perplexity(&UniformScorer { size: 3 }, &[""]),
            Err(LmError::EmptyCorpus)
        ));
    }

    #[test]
    fn score_file_round_trip() {
        let lines = ["a b c", "b c a", "c c"];
        let m = NgramModel::train(&lines, 2, &[0.75], build_vocab(&lines, 5).unwrap()).unwrap();
        let scores = vec![
            m.score("s1", &["a", "b"]).unwrap(),
            m.score("s2", &["c", "zz"]).unwrap(),
        ];
        let mut buf = Vec::new();
        write_scores(&mut buf, &scores).unwrap();
        let table = load_scores(buf.as_slice()).unwrap();
        assert_eq!(table.len(), 2);
        assert_eq!(table.get("s1"), Some(&scores[0]));
        assert_eq!(table.score("s2", &[]).unwrap(), scores[1]);
        assert!(matches!(
            table.score("s3", &[]),
            Err(LmError::MissingScore(_))
        ));
    }

    #[test]
    fn score_file_errors() {
        let rec = |id: &str, lp: &str| {
            format!("{{\"sentence_id\":\"{id}\",\"total_logprob\":{lp},\"token_count\":2}}\n")
        };
        let dup = rec("x", "-1.5") + &rec("x", "-2");
        match load_scores(dup.as_bytes()) {
            Err(e @ LmError::DuplicateId(_)) => assert!(e.to_string().contains("\"x\"")),
            other => panic!("{other:?}"),
        }
        assert!(load_scores(rec("x", "1.5").as_bytes()).is_err());
        assert!(load_scores("{\"sentence_id\":\"x\",\"token_count\":2}".as_bytes()).is_err());
        assert!(load_scores("{\"sentence_id\":\"x\",\"total_logprob\":-1,\"token_count\":2,\"token_logprobs\":[-0.5,-0.2]}".as_bytes()).is_err());
        assert!(load_scores(
            "{\"sentence_id\":\"x\",\"total_logprob\":-1e999,\"token_count\":2}".as_bytes()
        )
        .is_err());
        assert_eq!(load_scores(rec("y", "-3").as_bytes()).unwrap().len(), 1);
    }
}
