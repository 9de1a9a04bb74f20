//! Declarative dependency-tree patterns and a backtracking matcher.
//!
//! A [`TreePattern`] is a small tree of named node predicates joined by
//! dependency edges. `x >rel y` requires token `y` to be a dependent of `x`
//! with a relation in `rel`; `x >>k y` requires `y` to be a descendant of `x`
//! at most `k` levels down. See [`parse`] for the textual notation.

mod matcher;
mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::conllu::{Sentence, Token};

pub use parse::{parse_pattern, parse_predicate, WordLists};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("node {0:?} declared twice")]
    DuplicateNode(String),
    #[error("node {0:?} is referenced but never declared")]
    UnknownNode(String),
    #[error("node {0:?} has no constraints")]
    EmptyPredicate(String),
    #[error("node {node:?} has an empty {field} list")]
    EmptyList { node: String, field: &'static str },
    #[error("multi-word entry {entry:?} in single-token {field} list")]
    MultiWordEntry { entry: String, field: &'static str },
    #[error("word list @{0} is not defined")]
    UnknownWordList(String),
    #[error("node {0:?} has more than one parent edge")]
    MultipleParents(String),
    #[error("pattern edges do not form a connected tree")]
    NotATree,
    #[error("pattern has no nodes")]
    NoNodes,
}

/// One allowed dependency label. Unless `exact`, the label also matches its
/// subtypes: `nmod` matches `nmod:poss`, `acl` matches `acl:relcl`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RelSpec {
    pub label: String,
    pub exact: bool,
}

impl RelSpec {
    pub fn matches(&self, deprel: &str) -> bool {
        if self.exact {
            return deprel == self.label;
        }
        deprel == self.label
            || (deprel.len() > self.label.len()
                && deprel.starts_with(self.label.as_str())
                && deprel.as_bytes()[self.label.len()] == b':')
    }
}

impl fmt::Display for RelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exact {
            f.write_str("=")?;
        }
        f.write_str(&self.label)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RelSet(pub Vec<RelSpec>);

impl RelSet {
    pub fn new<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        RelSet(
            labels
                .into_iter()
                .map(|l| RelSpec {
                    label: l.into(),
                    exact: false,
                })
                .collect(),
        )
    }

    pub fn matches(&self, deprel: &str) -> bool {
        self.0.iter().any(|r| r.matches(deprel))
    }
}

/// Multi-token word sequences, compared case-insensitively on form.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PhraseList(pub Vec<Vec<String>>);

impl PhraseList {
    pub fn from_entries<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut phrases: Vec<Vec<String>> = entries
            .into_iter()
            .map(|e| {
                e.as_ref()
                    .split_whitespace()
                    .map(str::to_lowercase)
                    .collect::<Vec<_>>()
            })
            .filter(|p| !p.is_empty())
            .collect();
        phrases.sort();
        phrases.dedup();
        PhraseList(phrases)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True if some phrase ends exactly at 0-based token index `end`.
    pub fn ends_at(&self, tokens: &[Token], end: usize) -> bool {
        self.0.iter().any(|p| {
            p.len() <= end + 1 && {
                let start = end + 1 - p.len();
                tokens[start..=end]
                    .iter()
                    .zip(p)
                    .all(|(t, w)| t.form.to_lowercase() == *w)
            }
        })
    }

    /// Spans `(start, end)` (inclusive, 0-based) of every occurrence, ordered
    /// by end then start.
    pub fn occurrences(&self, tokens: &[Token]) -> Vec<(usize, usize)> {
        let lowered: Vec<String> = tokens.iter().map(|t| t.form.to_lowercase()).collect();
        let mut spans = Vec::new();
        for p in &self.0 {
            if p.len() > lowered.len() {
                continue;
            }
            for start in 0..=lowered.len() - p.len() {
                if lowered[start..start + p.len()] == p[..] {
                    spans.push((start, start + p.len() - 1));
                }
            }
        }
        spans.sort_by_key(|&(s, e)| (e, s));
        spans
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Before,
    After,
    ImmediatelyBefore,
    ImmediatelyAfter,
}

impl Order {
    /// Whether a token at `pos` stands in this relation to one at `other`.
    pub fn holds(self, pos: u32, other: u32) -> bool {
        match self {
            Order::Before => pos < other,
            Order::After => pos > other,
            Order::ImmediatelyBefore => pos + 1 == other,
            Order::ImmediatelyAfter => pos == other + 1,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Order::Before => "before",
            Order::After => "after",
            Order::ImmediatelyBefore => "immediately_before",
            Order::ImmediatelyAfter => "immediately_after",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositionConstraint {
    pub order: Order,
    /// Name of the other pattern node.
    pub other: String,
}

/// Constraints on a single token. Set fields are conjoined.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NodePredicate {
    pub upos_in: Option<BTreeSet<String>>,
    /// Relation to the token's own head.
    pub deprel_in: Option<RelSet>,
    /// Lowercased forms; matched case-insensitively.
    pub form_in: Option<BTreeSet<String>>,
    /// Matched case-sensitively.
    pub lemma_in: Option<BTreeSet<String>>,
    pub feats_require: Vec<(String, String)>,
    /// A phrase that must end on the token immediately before this one.
    pub preceded_by: Option<PhraseList>,
    pub position: Vec<PositionConstraint>,
}

impl NodePredicate {
    pub fn is_unconstrained(&self) -> bool {
        self.upos_in.is_none()
            && self.deprel_in.is_none()
            && self.form_in.is_none()
            && self.lemma_in.is_none()
            && self.feats_require.is_empty()
            && self.preceded_by.is_none()
            && self.position.is_empty()
    }

    pub fn upos(mut self, tags: &[&str]) -> Self {
        self.upos_in = Some(tags.iter().map(|t| t.to_string()).collect());
        self
    }

    pub fn deprel(mut self, rels: &[&str]) -> Self {
        self.deprel_in = Some(RelSet::new(rels.iter().copied()));
        self
    }

    pub fn forms<S: AsRef<str>>(mut self, words: &[S]) -> Self {
        self.form_in = Some(words.iter().map(|w| w.as_ref().to_lowercase()).collect());
        self
    }

    pub fn lemmas<S: AsRef<str>>(mut self, words: &[S]) -> Self {
        self.lemma_in = Some(words.iter().map(|w| w.as_ref().to_string()).collect());
        self
    }

    pub fn feat(mut self, key: &str, value: &str) -> Self {
        self.feats_require.push((key.into(), value.into()));
        self
    }

    pub fn at(mut self, order: Order, other: &str) -> Self {
        self.position.push(PositionConstraint {
            order,
            other: other.into(),
        });
        self
    }

    /// Evaluates every token-local constraint (everything except `position`).
    pub fn matches(&self, sentence: &Sentence, token: &Token) -> bool {
        if let Some(set) = &self.upos_in {
            if !set.contains(&token.upos) {
                return false;
            }
        }
        if let Some(rels) = &self.deprel_in {
            if !rels.matches(&token.deprel) {
                return false;
            }
        }
        if let Some(forms) = &self.form_in {
            if !forms.contains(&token.form.to_lowercase()) {
                return false;
            }
        }
        if let Some(lemmas) = &self.lemma_in {
            if !lemmas.contains(&token.lemma) {
                return false;
            }
        }
        if !self
            .feats_require
            .iter()
            .all(|(k, v)| token.feats.has(k, v))
        {
            return false;
        }
        if let Some(phrases) = &self.preceded_by {
            let idx = token.id as usize - 1;
            if idx == 0 || !phrases.ends_at(sentence.tokens(), idx - 1) {
                return false;
            }
        }
        true
    }

    fn validate(&self, name: &str) -> Result<(), PatternError> {
        if self.is_unconstrained() {
            return Err(PatternError::EmptyPredicate(name.into()));
        }
        let empty = |field| PatternError::EmptyList {
            node: name.into(),
            field,
        };
        if self.upos_in.as_ref().is_some_and(BTreeSet::is_empty) {
            return Err(empty("upos"));
        }
        if self.deprel_in.as_ref().is_some_and(|r| r.0.is_empty()) {
            return Err(empty("deprel"));
        }
        for (field, set) in [("form", &self.form_in), ("lemma", &self.lemma_in)] {
            if let Some(set) = set {
                if set.is_empty() {
                    return Err(empty(field));
                }
                if let Some(entry) = set.iter().find(|w| w.split_whitespace().count() != 1) {
                    return Err(PatternError::MultiWordEntry {
                        entry: entry.clone(),
                        field,
                    });
                }
            }
        }
        if self.preceded_by.as_ref().is_some_and(PhraseList::is_empty) {
            return Err(empty("preceded_by"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EdgeKind {
    /// Direct dependent, optionally restricted to a relation set.
    Child(Option<RelSet>),
    /// Dependent at depth 1..=max_depth (unbounded when `None`).
    Descendant { max_depth: Option<u32> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub parent: usize,
    pub child: usize,
    pub kind: EdgeKind,
}

/// A validated tree of node predicates.
#[derive(Debug, Clone, PartialEq)]
pub struct TreePattern {
    names: Vec<String>,
    preds: Vec<NodePredicate>,
    edges: Vec<Edge>,
    /// (node, order, other) with names resolved to node indices.
    positions: Vec<(usize, Order, usize)>,
    root: usize,
    /// Edges in an order where every parent is bound before its child.
    plan: Vec<usize>,
    word_lists: BTreeSet<String>,
    source: Option<String>,
}

/// Incremental construction of a [`TreePattern`].
#[derive(Debug, Default)]
pub struct PatternBuilder {
    nodes: Vec<(String, NodePredicate)>,
    edges: Vec<(String, String, EdgeKind)>,
    word_lists: BTreeSet<String>,
    source: Option<String>,
}

impl PatternBuilder {
    pub fn node(mut self, name: &str, pred: NodePredicate) -> Self {
        self.nodes.push((name.into(), pred));
        self
    }

    pub fn child(mut self, parent: &str, child: &str, rels: &[&str]) -> Self {
        let rels = if rels.is_empty() {
            None
        } else {
            Some(RelSet::new(rels.iter().copied()))
        };
        self.edges
            .push((parent.into(), child.into(), EdgeKind::Child(rels)));
        self
    }

    pub fn descendant(mut self, parent: &str, child: &str, max_depth: Option<u32>) -> Self {
        self.edges.push((
            parent.into(),
            child.into(),
            EdgeKind::Descendant { max_depth },
        ));
        self
    }

    pub fn edge(mut self, parent: &str, child: &str, kind: EdgeKind) -> Self {
        self.edges.push((parent.into(), child.into(), kind));
        self
    }

    pub(crate) fn uses_list(&mut self, name: &str) {
        self.word_lists.insert(name.into());
    }

    pub(crate) fn with_source(mut self, source: &str) -> Self {
        self.source = Some(source.into());
        self
    }

    pub fn build(self) -> Result<TreePattern, PatternError> {
        if self.nodes.is_empty() {
            return Err(PatternError::NoNodes);
        }
        let mut index: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, (name, pred)) in self.nodes.iter().enumerate() {
            if index.insert(name.as_str(), i).is_some() {
                return Err(PatternError::DuplicateNode(name.clone()));
            }
            pred.validate(name)?;
        }
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| PatternError::UnknownNode(name.into()))
        };
        let n = self.nodes.len();
        let mut parent_of = vec![None; n];
        let mut edges = Vec::with_capacity(self.edges.len());
        for (p, c, kind) in &self.edges {
            let (p, c) = (lookup(p)?, lookup(c)?);
            if p == c {
                return Err(PatternError::NotATree);
            }
            if parent_of[c].is_some() {
                return Err(PatternError::MultipleParents(self.nodes[c].0.clone()));
            }
            parent_of[c] = Some(edges.len());
            edges.push(Edge {
                parent: p,
                child: c,
                kind: kind.clone(),
            });
        }
        if edges.len() != n - 1 {
            return Err(PatternError::NotATree);
        }
        let roots: Vec<usize> = (0..n).filter(|&i| parent_of[i].is_none()).collect();
        if roots.len() != 1 {
            return Err(PatternError::NotATree);
        }
        let root = roots[0];
        // breadth-first plan from the root; also proves connectivity
        let mut plan = Vec::with_capacity(edges.len());
        let mut frontier = vec![root];
        let mut seen = vec![false; n];
        seen[root] = true;
        while let Some(node) = frontier.pop() {
            for (ei, e) in edges.iter().enumerate() {
                if e.parent == node && !seen[e.child] {
                    seen[e.child] = true;
                    plan.push(ei);
                    frontier.push(e.child);
                }
            }
        }
        if plan.len() != edges.len() {
            return Err(PatternError::NotATree);
        }
        let mut positions = Vec::new();
        for (i, (_, pred)) in self.nodes.iter().enumerate() {
            for pc in &pred.position {
                positions.push((i, pc.order, lookup(&pc.other)?));
            }
        }
        let (names, preds) = self.nodes.into_iter().unzip();
        Ok(TreePattern {
            names,
            preds,
            edges,
            positions,
            root,
            plan,
            word_lists: self.word_lists,
            source: self.source,
        })
    }
}

impl TreePattern {
    pub fn builder() -> PatternBuilder {
        PatternBuilder::default()
    }

    pub fn node_names(&self) -> &[String] {
        &self.names
    }

    pub fn predicates(&self) -> &[NodePredicate] {
        &self.preds
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Resolved linear-order constraints as `(node, order, other)`.
    pub fn positions(&self) -> &[(usize, Order, usize)] {
        &self.positions
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Names of the word lists the pattern was compiled against.
    pub fn word_lists(&self) -> &BTreeSet<String> {
        &self.word_lists
    }

    pub fn source(&self) -> Option<&str> {
        self.source.as_deref()
    }

    /// Every binding of pattern nodes to distinct tokens, ordered
    /// lexicographically by token ids in node declaration order.
    pub fn find_all(&self, sentence: &Sentence) -> Vec<MatchBinding> {
        let mut found = Vec::new();
        matcher::search(self, sentence, &mut |ids: &[u32]| {
            found.push(ids.to_vec());
            true
        });
        found.sort();
        found
            .into_iter()
            .map(|ids| MatchBinding {
                pairs: self.names.iter().cloned().zip(ids).collect(),
            })
            .collect()
    }

    /// True if the pattern matches anywhere; stops at the first match.
    pub fn is_match(&self, sentence: &Sentence) -> bool {
        let mut hit = false;
        matcher::search(self, sentence, &mut |_| {
            hit = true;
            false
        });
        hit
    }
}

/// Pattern node names bound to token ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchBinding {
    pairs: Vec<(String, u32)>,
}

impl MatchBinding {
    pub fn get(&self, name: &str) -> Option<u32> {
        self.pairs
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, id)| id)
    }

    pub fn ids(&self) -> Vec<u32> {
        self.pairs.iter().map(|&(_, id)| id).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.pairs.iter().map(|(n, id)| (n.as_str(), *id))
    }
}

/// All matches of `pattern` in `sentence`.
pub fn find_matches(sentence: &Sentence, pattern: &TreePattern) -> Vec<MatchBinding> {
    pattern.find_all(sentence)
}

/// Short-circuiting existence test.
pub fn has_match(sentence: &Sentence, pattern: &TreePattern) -> bool {
    pattern.is_match(sentence)
}
