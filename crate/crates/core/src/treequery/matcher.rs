//! Top-down backtracking over the sentence's child index.

use super::{EdgeKind, TreePattern};
use crate::conllu::Sentence;

/// Calls `emit` with the token ids (indexed like the pattern's nodes) of each
/// complete binding. `emit` returns `false` to stop the search.
pub(super) fn search(
    pattern: &TreePattern,
    sentence: &Sentence,
    emit: &mut dyn FnMut(&[u32]) -> bool,
) {
    if pattern.len() > sentence.len() {
        return;
    }
    let mut state = State {
        pattern,
        sentence,
        bound: vec![0; pattern.len()],
        used: vec![false; sentence.len() + 1],
    };
    let root_pred = &pattern.preds[pattern.root];
    for tok in sentence.tokens() {
        if !root_pred.matches(sentence, tok) {
            continue;
        }
        state.bind(pattern.root, tok.id);
        let go_on = state.extend(0, emit);
        state.unbind(pattern.root, tok.id);
        if !go_on {
            return;
        }
    }
}

struct State<'a> {
    pattern: &'a TreePattern,
    sentence: &'a Sentence,
    /// Token id bound to each pattern node (0 = unbound).
    bound: Vec<u32>,
    used: Vec<bool>,
}

impl State<'_> {
    fn bind(&mut self, node: usize, id: u32) {
        self.bound[node] = id;
        self.used[id as usize] = true;
    }

    fn unbind(&mut self, node: usize, id: u32) {
        self.bound[node] = 0;
        self.used[id as usize] = false;
    }

    fn extend(&mut self, step: usize, emit: &mut dyn FnMut(&[u32]) -> bool) -> bool {
        let Some(&edge_idx) = self.pattern.plan.get(step) else {
            return if self.order_ok() {
                emit(&self.bound)
            } else {
                true
            };
        };
        let edge = &self.pattern.edges[edge_idx];
        let parent_tok = self.bound[edge.parent];
        let candidates = self.candidates(parent_tok, &edge.kind);
        let pred = &self.pattern.preds[edge.child];
        for id in candidates {
            if self.used[id as usize] {
                continue;
            }
            let tok = &self.sentence.tokens()[id as usize - 1];
            if !pred.matches(self.sentence, tok) {
                continue;
            }
            self.bind(edge.child, id);
            let go_on = self.extend(step + 1, emit);
            self.unbind(edge.child, id);
            if !go_on {
                return false;
            }
        }
        true
    }

    fn candidates(&self, parent: u32, kind: &EdgeKind) -> Vec<u32> {
        match kind {
            EdgeKind::Child(rels) => self
                .sentence
                .children(parent)
                .iter()
                .copied()
                .filter(|&c| match rels {
                    Some(r) => r.matches(&self.sentence.tokens()[c as usize - 1].deprel),
                    None => true,
                })
                .collect(),
            EdgeKind::Descendant { max_depth } => {
                let limit = max_depth.unwrap_or(u32::MAX);
                let mut out = Vec::new();
                let mut level = vec![parent];
                let mut depth = 0;
                while !level.is_empty() && depth < limit {
                    depth += 1;
                    let next: Vec<u32> = level
                        .iter()
                        .flat_map(|&p| self.sentence.children(p).iter().copied())
                        .collect();
                    out.extend_from_slice(&next);
                    level = next;
                }
                out
            }
        }
    }

    fn order_ok(&self) -> bool {
        self.pattern
            .positions
            .iter()
            .all(|&(node, order, other)| order.holds(self.bound[node], self.bound[other]))
    }
}
