//! Word lists derived from benchmark pairs.
//!
//! Three filters are defined by the vocabulary of the benchmarks they target.
//! The lists are read off the pair files with fixed rules:
//!
//! * `agr-re-irr-sv-nouns` (subject rule): in both sentences of each pair, the
//!   first token after any leading determiners. These benchmarks open with a
//!   simple subject, so that token is the subject noun.
//! * `det-noun-nouns` (agreement-site rule): the tokens at positions where the
//!   two sentences differ; when the differing token is a demonstrative, the
//!   token right after it is taken instead.
//! * `passive-verbs` (difference rule): the tokens at positions where the two
//!   sentences differ, i.e. the participles swapped between the sentences.
//!
//! Entries are lowercased, deduplicated and sorted.

use std::collections::{BTreeMap, BTreeSet};

use crate::eval::MinimalPair;

use super::Registry;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractionRule {
    SubjectHead,
    AgreementSite,
    Difference,
}

/// (list name, filter whose benchmarks feed it, rule)
pub const DERIVED_LISTS: [(&str, &str, ExtractionRule); 3] = [
    (
        "agr-re-irr-sv-nouns",
        "agr-re-irr-sv",
        ExtractionRule::SubjectHead,
    ),
    ("det-noun-nouns", "det-noun", ExtractionRule::AgreementSite),
    ("passive-verbs", "passive", ExtractionRule::Difference),
];

const DETERMINERS: [&str; 16] = [
    "the", "a", "an", "this", "that", "these", "those", "some", "every", "each", "no", "all",
    "many", "few", "most", "several",
];

const DEMONSTRATIVES: [&str; 4] = ["this", "that", "these", "those"];

fn is_word(t: &str) -> bool {
    t.chars().any(char::is_alphanumeric)
}

fn lower(tokens: &[&str]) -> Vec<String> {
    tokens.iter().map(|t| t.to_lowercase()).collect()
}

/// Applies `rule` to one pair.
pub fn extract_from_pair(pair: &MinimalPair, rule: ExtractionRule) -> Vec<String> {
    let good = lower(&pair.good_tokens());
    let bad = lower(&pair.bad_tokens());
    let mut out = Vec::new();
    match rule {
        ExtractionRule::SubjectHead => {
            for sent in [&good, &bad] {
                if let Some(t) = sent
                    .iter()
                    .find(|t| !DETERMINERS.contains(&t.as_str()) && is_word(t))
                {
                    out.push(t.clone());
                }
            }
        }
        ExtractionRule::AgreementSite | ExtractionRule::Difference => {
            if good.len() != bad.len() {
                return out;
            }
            for i in (0..good.len()).filter(|&i| good[i] != bad[i]) {
                for sent in [&good, &bad] {
                    let tok = &sent[i];
                    let pick = if rule == ExtractionRule::AgreementSite
                        && DEMONSTRATIVES.contains(&tok.as_str())
                    {
                        sent.get(i + 1)
                    } else {
                        Some(tok)
                    };
                    if let Some(t) = pick.filter(|t| is_word(t)) {
                        out.push(t.clone());
                    }
                }
            }
        }
    }
    out
}

/// Builds every derived list from the pairs of the benchmarks each source
/// filter targets. Lists without any matching pairs are omitted.
pub fn extract_word_lists(
    pairs: &[MinimalPair],
    registry: &Registry,
) -> BTreeMap<String, Vec<String>> {
    let mut out = BTreeMap::new();
    for (list, filter, rule) in DERIVED_LISTS {
        let Ok(spec) = registry.get(filter) else {
            continue;
        };
        let words: BTreeSet<String> = pairs
            .iter()
            .filter(|p| spec.targets(&p.benchmark))
            .flat_map(|p| extract_from_pair(p, rule))
            .collect();
        if !words.is_empty() {
            out.insert(list.to_string(), words.into_iter().collect());
        }
    }
    out
}
