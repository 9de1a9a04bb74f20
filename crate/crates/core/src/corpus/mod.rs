//! Corpus-level transforms over one-sentence-per-line text: seeded uniform
//! downsampling, vocabulary construction and line/token/type counts.

pub mod rng;
mod sample;

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use rayon::prelude::*;
use thiserror::Error;

pub use sample::{downsample, plan, replay, scan, select_indices, SampleManifest};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot sample {target} lines from a corpus of {available} lines")]
    TargetTooLarge { target: u64, available: u64 },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("vocabulary size must be at least 1")]
    ZeroSize,
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("input does not match the manifest source (expected {expected}, found {found})")]
    SourceMismatch { expected: String, found: String },
    #[error("vocabulary file: {0}")]
    VocabFile(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub const UNK: &str = "<unk>";
pub const EOS: &str = "<eos>";

/// Ranked token inventory plus the unknown and end-of-sentence entries.
///
/// Ids: items take `0..items.len()` in rank order, then `<unk>`, then `<eos>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    items: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    fn from_items(items: Vec<String>) -> Result<Self, CorpusError> {
        let mut index = HashMap::with_capacity(items.len());
        for (i, it) in items.iter().enumerate() {
            if it == UNK || it == EOS {
                return Err(CorpusError::VocabFile(format!(
                    "reserved entry {it:?} among items"
                )));
            }
            if index.insert(it.clone(), i as u32).is_some() {
                return Err(CorpusError::VocabFile(format!("duplicate entry {it:?}")));
            }
        }
        Ok(Vocabulary { items, index })
    }

    /// Non-special entries in rank order.
    pub fn items(&self) -> &[String] {
        &self.items
    }

    /// `|items| + 2`.
    pub fn size(&self) -> usize {
        self.items.len() + 2
    }

    pub fn unk_id(&self) -> u32 {
        self.items.len() as u32
    }

    pub fn eos_id(&self) -> u32 {
        self.items.len() as u32 + 1
    }

    /// Id of `token`, or the unknown id.
    pub fn id(&self, token: &str) -> u32 {
        match self.index.get(token) {
            Some(&i) => i,
            None if token == EOS => self.eos_id(),
            None => self.unk_id(),
        }
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        match id as usize {
            i if i < self.items.len() => Some(&self.items[i]),
            i if i == self.items.len() => Some(UNK),
            i if i == self.items.len() + 1 => Some(EOS),
            _ => None,
        }
    }

    /// One entry per line, rank = line number; the specials come last.
    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        for it in &self.items {
            writeln!(w, "{it}")?;
        }
        writeln!(w, "{UNK}")?;
        writeln!(w, "{EOS}")?;
        w.flush()
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self, CorpusError> {
        let mut items = Vec::new();
        for line in r.lines() {
            items.push(line?);
        }
        if items.len() < 2 || items[items.len() - 2] != UNK || items[items.len() - 1] != EOS {
            return Err(CorpusError::VocabFile(format!(
                "expected the last two lines to be {UNK} and {EOS}"
            )));
        }
        items.truncate(items.len() - 2);
        Self::from_items(items)
    }
}

/// Token frequencies of whitespace-tokenized lines, counted in parallel.
pub fn count_tokens<S: AsRef<str> + Sync>(lines: &[S]) -> HashMap<String, u64> {
    lines
        .par_iter()
        .fold(HashMap::new, |mut m: HashMap<String, u64>, l| {
            for t in l.as_ref().split_whitespace() {
                *m.entry(t.to_string()).or_default() += 1;
            }
            m
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_default() += v;
            }
            a
        })
}

/// The `size` most frequent tokens, ties broken lexicographically (byte
/// order). Case is preserved; literal `<unk>`/`<eos>` tokens are not items.
pub fn build_vocab<S: AsRef<str> + Sync>(
    lines: &[S],
    size: usize,
) -> Result<Vocabulary, CorpusError> {
    if size == 0 {
        return Err(CorpusError::ZeroSize);
    }
    let counts = count_tokens(lines);
    if counts.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let mut ranked: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|(t, _)| t != UNK && t != EOS)
        .collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(size);
    Vocabulary::from_items(ranked.into_iter().map(|(t, _)| t).collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct CorpusStats {
    pub lines: u64,
    pub tokens: u64,
    pub types: u64,
}

/// Exact counts; blank lines count as lines with no tokens.
pub fn corpus_stats<R: BufRead>(reader: R) -> Result<CorpusStats, CorpusError> {
    let mut stats = CorpusStats::default();
    let mut types = std::collections::HashSet::new();
    for line in reader.lines() {
        let line = line?;
        stats.lines += 1;
        for t in line.split_whitespace() {
            stats.tokens += 1;
            if !types.contains(t) {
                types.insert(t.to_string());
            }
        }
    }
    stats.types = types.len() as u64;
    Ok(stats)
}
