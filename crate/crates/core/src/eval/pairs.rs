//! Minimal-pair benchmark files.
//!
//! Pair files hold one JSON object per line:
//! `{"pair_id": "...", "benchmark": "...", "sentence_good": "...", "sentence_bad": "..."}`
//! with sentences already split into space-separated tokens. BLiMP's own
//! JSONL distribution is converted with [`ingest_blimp`].

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::EvalError;

/// A grammatical / ungrammatical sentence pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinimalPair {
    pub pair_id: String,
    pub benchmark: String,
    #[serde(rename = "sentence_good")]
    pub good: String,
    #[serde(rename = "sentence_bad")]
    pub bad: String,
}

impl MinimalPair {
    pub fn good_tokens(&self) -> Vec<&str> {
        self.good.split_whitespace().collect()
    }

    pub fn bad_tokens(&self) -> Vec<&str> {
        self.bad.split_whitespace().collect()
    }

    /// Score-file ids of the two sentences.
    pub fn good_id(&self) -> String {
        format!("{}:good", self.pair_id)
    }

    pub fn bad_id(&self) -> String {
        format!("{}:bad", self.pair_id)
    }

    fn validate(&self, line: usize) -> Result<(), EvalError> {
        let bad = |message: &str| EvalError::Record {
            line,
            message: format!("pair {:?}: {message}", self.pair_id),
        };
        if self.pair_id.is_empty() {
            return Err(bad("empty pair_id"));
        }
        if self.benchmark.is_empty() {
            return Err(bad("empty benchmark"));
        }
        if self.good.split_whitespace().next().is_none()
            || self.bad.split_whitespace().next().is_none()
        {
            return Err(bad("empty sentence"));
        }
        if self.good_tokens() == self.bad_tokens() {
            return Err(bad("grammatical and ungrammatical sentences are identical"));
        }
        Ok(())
    }
}

/// Reads a pair file, rejecting malformed records and duplicate ids.
pub fn read_pairs<R: BufRead>(reader: R) -> Result<Vec<MinimalPair>, EvalError> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let pair: MinimalPair = serde_json::from_str(&line).map_err(|e| EvalError::Record {
            line: i + 1,
            message: e.to_string(),
        })?;
        pair.validate(i + 1)?;
        if !seen.insert(pair.pair_id.clone()) {
            return Err(EvalError::DuplicateId(pair.pair_id));
        }
        out.push(pair);
    }
    Ok(out)
}

pub fn write_pairs<W: Write>(mut w: W, pairs: &[MinimalPair]) -> Result<(), EvalError> {
    for p in pairs {
        serde_json::to_writer(&mut w, p).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Deserialize)]
struct BlimpRecord {
    sentence_good: String,
    sentence_bad: String,
    #[serde(rename = "UID")]
    uid: String,
    #[serde(rename = "pairID")]
    pair_id: serde_json::Value,
}

/// Converts BLiMP JSONL records (`sentence_good`, `sentence_bad`, `UID`,
/// `pairID`) into tokenized minimal pairs with ids `<UID>-<pairID>`.
pub fn ingest_blimp<R: BufRead>(reader: R) -> Result<Vec<MinimalPair>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: BlimpRecord = serde_json::from_str(&line).map_err(|e| EvalError::Record {
            line: i + 1,
            message: e.to_string(),
        })?;
        let id = match &rec.pair_id {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        let pair = MinimalPair {
            pair_id: format!("{}-{}", rec.uid, id),
            benchmark: rec.uid,
            good: tokenize(&rec.sentence_good).join(" "),
            bad: tokenize(&rec.sentence_bad).join(" "),
        };
        pair.validate(i + 1)?;
        out.push(pair);
    }
    Ok(out)
}

const CLITICS: [&str; 6] = ["'s", "'re", "'ve", "'ll", "'d", "'m"];

/// Penn-Treebank-style split of raw benchmark text: punctuation is separated,
/// `n't` and the common clitics (`'s`, `'re`, ...) become their own tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let text = text.replace(['\u{2019}', '\u{2018}'], "'");
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let mut word = word;
        let mut trailing = Vec::new();
        while let Some(c) = word.chars().last() {
            if matches!(c, '.' | ',' | '?' | '!' | ';' | ':' | '"') && word.len() > 1 {
                trailing.push(c.to_string());
                word = &word[..word.len() - 1];
            } else {
                break;
            }
        }
        let lower = word.to_lowercase();
        if lower.ends_with("n't") && word.len() > 3 {
            let cut = word.len() - 3;
            out.push(word[..cut].to_string());
            out.push(word[cut..].to_string());
        } else if let Some(c) = CLITICS
            .iter()
            .find(|c| lower.ends_with(&c.to_lowercase()) && word.len() > c.len())
        {
            let cut = word.len() - c.len();
            out.push(word[..cut].to_string());
            out.push(word[cut..].to_string());
        } else {
            out.push(word.to_string());
        }
        out.extend(trailing.into_iter().rev());
    }
    out
}
