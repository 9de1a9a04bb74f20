//! Corpus filters: named sets of tree patterns and lexical rules that decide
//! which sentences to remove, plus filtering with per-corpus accounting.
//!
//! The fifteen default filters and their word lists live as plain text under
//! `data/` and are compiled into the binary; a directory of `.filter` files
//! or word lists can replace them at run time.

pub mod lexical;
mod registry;
pub mod wordlists;

use std::collections::BTreeMap;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::conllu::Sentence;
use crate::treequery::{parse_pattern, PatternError, TreePattern, WordLists};

pub use lexical::LexicalRule;
pub use registry::{load_word_lists, registry, Registry, BUILTIN_WORD_LISTS};

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("unknown filter {0:?}")]
    UnknownFilter(String),
    #[error("duplicate filter name {0:?}")]
    DuplicateFilter(String),
    #[error("{file}:{line}: {message}")]
    Definition {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{file}: {source}")]
    Pattern {
        file: String,
        #[source]
        source: PatternError,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub enum FilterRule {
    Pattern(TreePattern),
    Lexical(LexicalRule),
}

impl FilterRule {
    pub fn is_match(&self, sentence: &Sentence) -> bool {
        match self {
            FilterRule::Pattern(p) => p.is_match(sentence),
            FilterRule::Lexical(r) => r.is_match(sentence),
        }
    }
}

/// A named corpus filter. A sentence is discarded if any rule matches it.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpec {
    pub name: String,
    pub description: String,
    pub rules: Vec<FilterRule>,
    /// The word lists the rules were compiled against, by name.
    pub word_lists: BTreeMap<String, Vec<String>>,
    /// Benchmarks this filter targets, i.e. the B with F(B) = this filter.
    pub targeted_benchmarks: Vec<String>,
}

impl FilterSpec {
    /// Parses a filter definition file.
    ///
    /// ```text
    /// # comment
    /// name: agr-pp-mod
    /// description: subjects modified by a prepositional phrase
    /// benchmark: distractor_agreement_relational_noun
    /// pattern: V:VERB >nsubj N1:NOUN >nmod N2:NOUN >case P:ADP
    /// lexical: {form=only} .. @npi
    /// ```
    ///
    /// `benchmark`, `pattern` and `lexical` may repeat; indented lines
    /// continue the previous value.
    pub fn parse(text: &str, file: &str, lists: &WordLists) -> Result<Self, FilterError> {
        let def_err = |line: usize, message: String| FilterError::Definition {
            file: file.to_string(),
            line,
            message,
        };
        let mut entries: Vec<(usize, String, String)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            if line.starts_with(char::is_whitespace) {
                match entries.last_mut() {
                    Some((_, _, value)) => {
                        value.push(' ');
                        value.push_str(line.trim());
                    }
                    None => return Err(def_err(lineno, "continuation before any key".into())),
                }
                continue;
            }
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| def_err(lineno, format!("expected `key: value`, got {line:?}")))?;
            entries.push((lineno, key.trim().to_string(), value.trim().to_string()));
        }

        let mut name = None;
        let mut description = String::new();
        let mut rules = Vec::new();
        let mut benchmarks = Vec::new();
        let mut used = std::collections::BTreeSet::new();
        let pattern_err = |source| FilterError::Pattern {
            file: file.to_string(),
            source,
        };
        for (lineno, key, value) in entries {
            match key.as_str() {
                "name" => name = Some(value),
                "description" => description = value,
                "benchmark" => benchmarks.extend(value.split_whitespace().map(str::to_string)),
                "pattern" => {
                    let p = parse_pattern(&value, lists).map_err(pattern_err)?;
                    used.extend(p.word_lists().iter().cloned());
                    rules.push(FilterRule::Pattern(p));
                }
                "lexical" => {
                    let r = LexicalRule::parse(&value, lists).map_err(pattern_err)?;
                    used.extend(r.word_lists().iter().cloned());
                    rules.push(FilterRule::Lexical(r));
                }
                other => return Err(def_err(lineno, format!("unknown key {other:?}"))),
            }
        }
        let name = name.ok_or_else(|| def_err(0, "missing `name`".into()))?;
        if benchmarks.is_empty() {
            return Err(def_err(
                0,
                "a filter must target at least one benchmark".into(),
            ));
        }
        if rules.is_empty() {
            return Err(def_err(
                0,
                "a filter needs at least one pattern or lexical rule".into(),
            ));
        }
        let word_lists = used
            .into_iter()
            .filter_map(|n| lists.get(&n).map(|l| (n, l.clone())))
            .collect();
        Ok(FilterSpec {
            name,
            description,
            rules,
            word_lists,
            targeted_benchmarks: benchmarks,
        })
    }

    /// True if the filter removes this sentence.
    pub fn discards(&self, sentence: &Sentence) -> bool {
        self.rules.iter().any(|r| r.is_match(sentence))
    }

    pub fn targets(&self, benchmark: &str) -> bool {
        self.targeted_benchmarks.iter().any(|b| b == benchmark)
    }
}

/// Sentence and token accounting for one filtered corpus.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FilterStats {
    pub input_sentences: u64,
    pub discarded_sentences: u64,
    pub input_tokens: u64,
    pub output_tokens: u64,
}

impl FilterStats {
    pub fn record(&mut self, sentence: &Sentence, discarded: bool) {
        let n = sentence.len() as u64;
        self.input_sentences += 1;
        self.input_tokens += n;
        if discarded {
            self.discarded_sentences += 1;
        } else {
            self.output_tokens += n;
        }
    }

    pub fn kept_sentences(&self) -> u64 {
        self.input_sentences - self.discarded_sentences
    }

    /// Percentage of input sentences discarded; 0 for an empty corpus.
    pub fn pct_sentences_filtered(&self) -> f64 {
        if self.input_sentences == 0 {
            0.0
        } else {
            100.0 * self.discarded_sentences as f64 / self.input_sentences as f64
        }
    }

    /// Kept tokens as a percentage of input tokens; 0 for an empty corpus.
    pub fn tokens_pct_of_full(&self) -> f64 {
        if self.input_tokens == 0 {
            0.0
        } else {
            100.0 * self.output_tokens as f64 / self.input_tokens as f64
        }
    }
}

/// In-memory result of [`apply_filter`].
#[derive(Debug, Clone, Default)]
pub struct FilterOutcome {
    pub kept: Vec<Sentence>,
    pub discarded: Vec<Sentence>,
    pub stats: FilterStats,
}

/// Splits `sentences` into kept and discarded streams, preserving order.
pub fn apply_filter<I>(sentences: I, filter: &FilterSpec) -> FilterOutcome
where
    I: IntoIterator<Item = Sentence>,
{
    let mut out = FilterOutcome::default();
    for s in sentences {
        let drop = filter.discards(&s);
        out.stats.record(&s, drop);
        if drop {
            out.discarded.push(s);
        } else {
            out.kept.push(s);
        }
    }
    out
}

/// Evaluates several filters over a batch in parallel. `result[i][f]` is
/// whether filter `f` discards sentence `i`; order follows the input.
pub fn decide_batch(sentences: &[Sentence], filters: &[&FilterSpec]) -> Vec<Vec<bool>> {
    sentences
        .par_iter()
        .map(|s| filters.iter().map(|f| f.discards(s)).collect())
        .collect()
}

/// Writes the filter statistics CSV: one row per filter.
pub fn write_stats_csv<W: Write>(out: W, rows: &[(&str, FilterStats)]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "corpus",
        "pct_sentences_filtered",
        "tokens_pct_of_full",
        "input_sentences",
        "discarded_sentences",
        "input_tokens",
        "output_tokens",
    ])?;
    for (name, s) in rows {
        w.write_record([
            name.to_string(),
            format!("{:.2}", s.pct_sentences_filtered()),
            format!("{:.2}", s.tokens_pct_of_full()),
            s.input_sentences.to_string(),
            s.discarded_sentences.to_string(),
            s.input_tokens.to_string(),
            s.output_tokens.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
