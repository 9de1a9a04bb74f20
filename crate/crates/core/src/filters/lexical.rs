//! Word-list rules over the linear token sequence.
//!
//! ```text
//! rule := term ('&' term)*          all terms must hold
//! term := alt ('..' alt)*           occurrences in this order, non-overlapping
//! alt  := atom ('|' atom)*          any of the atoms
//! atom := '@' LIST                  any phrase of the list (multi-word allowed)
//!       | '{' attrs '}'             one token satisfying a node predicate
//!       | 'last' '{' attrs '}'      the final token, satisfying the predicate
//! ```
//!
//! Example: `{form=only} .. @npi` holds when an NPI occurs somewhere after "only".

use std::collections::BTreeSet;

use crate::conllu::Sentence;
use crate::treequery::{parse_predicate, NodePredicate, PatternError, PhraseList, WordLists};

#[derive(Debug, Clone, PartialEq)]
enum Atom {
    Phrases(PhraseList),
    Token(NodePredicate),
    Last(NodePredicate),
}

impl Atom {
    /// Inclusive 0-based spans of every occurrence.
    fn spans(&self, sentence: &Sentence) -> Vec<(usize, usize)> {
        let tokens = sentence.tokens();
        match self {
            Atom::Phrases(p) => p.occurrences(tokens),
            Atom::Token(pred) => tokens
                .iter()
                .enumerate()
                .filter(|(_, t)| pred.matches(sentence, t))
                .map(|(i, _)| (i, i))
                .collect(),
            Atom::Last(pred) => match tokens.last() {
                Some(t) if pred.matches(sentence, t) => vec![(tokens.len() - 1, tokens.len() - 1)],
                _ => Vec::new(),
            },
        }
    }
}

/// A compiled lexical rule.
#[derive(Debug, Clone, PartialEq)]
pub struct LexicalRule {
    /// Conjunction of ordered sequences of alternatives.
    terms: Vec<Vec<Vec<Atom>>>,
    word_lists: BTreeSet<String>,
    source: String,
}

impl LexicalRule {
    pub fn parse(src: &str, lists: &WordLists) -> Result<Self, PatternError> {
        let mut word_lists = BTreeSet::new();
        let mut terms = Vec::new();
        for term_src in split_top(src, "&") {
            let mut seq = Vec::new();
            for alt_src in split_top(&term_src, "..") {
                let mut alts = Vec::new();
                for atom_src in split_top(&alt_src, "|") {
                    alts.push(parse_atom(atom_src.trim(), lists, &mut word_lists)?);
                }
                seq.push(alts);
            }
            terms.push(seq);
        }
        Ok(LexicalRule {
            terms,
            word_lists,
            source: src.trim().to_string(),
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn word_lists(&self) -> &BTreeSet<String> {
        &self.word_lists
    }

    pub fn is_match(&self, sentence: &Sentence) -> bool {
        self.terms.iter().all(|seq| sequence_holds(seq, sentence))
    }
}

fn sequence_holds(seq: &[Vec<Atom>], sentence: &Sentence) -> bool {
    // Earliest-ending choice at each step leaves the most room for the rest.
    let mut next_start = 0usize;
    for alts in seq {
        let best_end = alts
            .iter()
            .flat_map(|a| a.spans(sentence))
            .filter(|&(start, _)| start >= next_start)
            .map(|(_, end)| end)
            .min();
        match best_end {
            Some(end) => next_start = end + 1,
            None => return false,
        }
    }
    true
}

/// Splits on `sep` outside `{...}` blocks.
fn split_top(src: &str, sep: &str) -> Vec<String> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut cur = String::new();
    let mut rest = src;
    while !rest.is_empty() {
        if depth == 0 && rest.starts_with(sep) {
            parts.push(std::mem::take(&mut cur));
            rest = &rest[sep.len()..];
            continue;
        }
        let c = rest.chars().next().unwrap();
        match c {
            '{' => depth += 1,
            '}' => depth = depth.saturating_sub(1),
            _ => {}
        }
        cur.push(c);
        rest = &rest[c.len_utf8()..];
    }
    parts.push(cur);
    parts
}

fn syntax(message: String) -> PatternError {
    PatternError::Syntax { offset: 0, message }
}

fn parse_atom(
    src: &str,
    lists: &WordLists,
    used: &mut BTreeSet<String>,
) -> Result<Atom, PatternError> {
    if let Some(name) = src.strip_prefix('@') {
        let entries = lists
            .get(name)
            .ok_or_else(|| PatternError::UnknownWordList(name.into()))?;
        let phrases = PhraseList::from_entries(entries);
        if phrases.is_empty() {
            return Err(PatternError::EmptyList {
                node: format!("@{name}"),
                field: "phrase",
            });
        }
        used.insert(name.into());
        return Ok(Atom::Phrases(phrases));
    }
    let (last, block) = match src.strip_prefix("last") {
        Some(rest) => (true, rest.trim_start()),
        None => (false, src),
    };
    if !block.starts_with('{') {
        return Err(syntax(format!("expected @list or {{...}}, found {src:?}")));
    }
    for name in block.split('@').skip(1) {
        let name: String = name
            .chars()
            .take_while(|c| c.is_ascii_alphanumeric() || *c == '_' || *c == '-')
            .collect();
        used.insert(name);
    }
    let pred = parse_predicate(block, lists)?;
    Ok(if last {
        Atom::Last(pred)
    } else {
        Atom::Token(pred)
    })
}
