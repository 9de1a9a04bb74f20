//! Textual pattern notation.
//!
//! ```text
//! pattern  := clause (';' clause)*
//! clause   := node (relop node)*
//! relop    := '>' rels?        right node is a dependent of the left one
//!           | '<' rels?        left node is a dependent of the right one
//!           | '>>' depth?      right node is a descendant (at most `depth` levels down)
//! rels     := ['='] label ('|' ['='] label)*     '=' disables subtype matching
//! node     := NAME [':' UPOS ('|' UPOS)*] ['{' attr (',' attr)* '}']
//!           | NAME             reference to a node declared earlier
//! attr     := upos=TAGS | deprel=rels | form=WORDS | lemma=WORDS
//!           | feats=Key=Value('|'Key=Value)* | preceded_by=PHRASES
//!           | before=NAME | after=NAME | immediately_before=NAME | immediately_after=NAME
//! WORDS    := item ('|' item)*, where item is a literal or @list
//! ```
//!
//! Relation operators chain left to right, so
//! `V:VERB >nsubj N1:NOUN >nmod N2:NOUN >case P:ADP` is a four-node path.
//! Branches are written as extra clauses that refer back to declared nodes:
//! `N:NOUN >det D:DET ; N >amod A:ADJ`.

use std::collections::{BTreeMap, BTreeSet};

use super::{
    EdgeKind, NodePredicate, Order, PatternBuilder, PatternError, PhraseList, PositionConstraint,
    RelSet, RelSpec, TreePattern,
};

/// Named word lists that `@name` items expand to.
pub type WordLists = BTreeMap<String, Vec<String>>;

/// Parses a pattern in the notation above.
pub fn parse_pattern(src: &str, lists: &WordLists) -> Result<TreePattern, PatternError> {
    let mut p = Parser::new(src, lists);
    let mut builder = TreePattern::builder().with_source(src.trim());
    let mut declared: BTreeSet<String> = BTreeSet::new();
    loop {
        let mut left = p.node(&mut builder, &mut declared)?;
        loop {
            p.skip_ws();
            let Some(op) = p.relop()? else { break };
            let right = p.node(&mut builder, &mut declared)?;
            builder = match op {
                RelOp::Down(kind) => builder.edge(&left, &right, kind),
                RelOp::Up(kind) => builder.edge(&right, &left, kind),
            };
            left = right;
        }
        p.skip_ws();
        match p.peek() {
            None => break,
            Some(';') => p.pos += 1,
            Some(c) => return Err(p.error(format!("unexpected {c:?}"))),
        }
    }
    for name in std::mem::take(&mut p.used_lists) {
        builder.uses_list(&name);
    }
    builder.build()
}

/// Parses a stand-alone attribute block such as `{form=not|never, deprel=advmod}`.
/// Position attributes are rejected because there are no other nodes.
pub fn parse_predicate(src: &str, lists: &WordLists) -> Result<NodePredicate, PatternError> {
    let mut p = Parser::new(src, lists);
    p.skip_ws();
    let mut pred = NodePredicate::default();
    p.expect('{')?;
    p.attrs(&mut pred)?;
    p.skip_ws();
    if p.peek().is_some() {
        return Err(p.error("trailing input after attribute block".into()));
    }
    if let Some(pc) = pred.position.first() {
        return Err(PatternError::UnknownNode(pc.other.clone()));
    }
    pred.validate("{}")?;
    Ok(pred)
}

enum RelOp {
    Down(EdgeKind),
    Up(EdgeKind),
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn is_label_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == ':' || c == '-'
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    lists: &'a WordLists,
    used_lists: BTreeSet<String>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, lists: &'a WordLists) -> Self {
        Parser {
            src,
            pos: 0,
            lists,
            used_lists: BTreeSet::new(),
        }
    }

    fn error(&self, message: String) -> PatternError {
        PatternError::Syntax {
            offset: self.pos,
            message,
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn expect(&mut self, c: char) -> Result<(), PatternError> {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.error(format!("expected {c:?}")))
        }
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if !f(c) {
                break;
            }
            self.pos += c.len_utf8();
        }
        &self.src[start..self.pos]
    }

    fn name(&mut self) -> Result<String, PatternError> {
        let name = self.take_while(is_name_char);
        if name.is_empty() {
            Err(self.error("expected a node name".into()))
        } else {
            Ok(name.to_string())
        }
    }

    fn node(
        &mut self,
        builder: &mut PatternBuilder,
        declared: &mut BTreeSet<String>,
    ) -> Result<String, PatternError> {
        self.skip_ws();
        let name = self.name()?;
        let mut pred = NodePredicate::default();
        let mut declares = false;
        if self.peek() == Some(':') {
            self.pos += 1;
            let tags = self.take_while(|c| is_name_char(c) || c == '|');
            let set: BTreeSet<String> = tags
                .split('|')
                .filter(|t| !t.is_empty())
                .map(str::to_string)
                .collect();
            if set.is_empty() {
                return Err(self.error("expected UPOS tags after ':'".into()));
            }
            pred.upos_in = Some(set);
            declares = true;
        }
        if self.peek() == Some('{') {
            self.pos += 1;
            self.attrs(&mut pred)?;
            declares = true;
        }
        if declares {
            if !declared.insert(name.clone()) {
                return Err(PatternError::DuplicateNode(name));
            }
            *builder = std::mem::take(builder).node(&name, pred);
        } else if !declared.contains(&name) {
            return Err(PatternError::UnknownNode(name));
        }
        Ok(name)
    }

    fn relop(&mut self) -> Result<Option<RelOp>, PatternError> {
        let rest = self.rest();
        if rest.starts_with(">>") {
            self.pos += 2;
            let digits = self.take_while(|c| c.is_ascii_digit());
            let max_depth = if digits.is_empty() {
                None
            } else {
                let d: u32 = digits.parse().map_err(|_| self.error("bad depth".into()))?;
                if d == 0 {
                    return Err(self.error("descendant depth must be at least 1".into()));
                }
                Some(d)
            };
            return Ok(Some(RelOp::Down(EdgeKind::Descendant { max_depth })));
        }
        let up = match self.peek() {
            Some('>') => false,
            Some('<') => true,
            _ => return Ok(None),
        };
        self.pos += 1;
        let rels = self.rels()?;
        let kind = EdgeKind::Child(rels);
        Ok(Some(if up {
            RelOp::Up(kind)
        } else {
            RelOp::Down(kind)
        }))
    }

    fn rels(&mut self) -> Result<Option<RelSet>, PatternError> {
        let text = self.take_while(|c| is_label_char(c) || c == '|' || c == '=');
        if text.is_empty() {
            return Ok(None);
        }
        parse_rels(text)
            .map(Some)
            .ok_or_else(|| self.error(format!("bad relation list {text:?}")))
    }

    fn attrs(&mut self, pred: &mut NodePredicate) -> Result<(), PatternError> {
        loop {
            self.skip_ws();
            if self.peek() == Some('}') {
                self.pos += 1;
                return Ok(());
            }
            let key = self.take_while(is_name_char).to_string();
            if key.is_empty() {
                return Err(self.error("expected an attribute name".into()));
            }
            self.skip_ws();
            self.expect('=')?;
            let value = self.take_while(|c| c != ',' && c != '}').trim();
            self.apply(pred, &key, value)?;
            match self.peek() {
                Some(',') => self.pos += 1,
                Some('}') => {
                    self.pos += 1;
                    return Ok(());
                }
                _ => return Err(self.error("unterminated attribute block".into())),
            }
        }
    }

    fn words(&mut self, value: &str) -> Result<Vec<String>, PatternError> {
        let mut out = Vec::new();
        for item in value.split('|').map(str::trim) {
            if let Some(list) = item.strip_prefix('@') {
                let entries = self
                    .lists
                    .get(list)
                    .ok_or_else(|| PatternError::UnknownWordList(list.into()))?;
                self.used_lists.insert(list.into());
                out.extend(entries.iter().cloned());
            } else if !item.is_empty() {
                out.push(item.to_string());
            }
        }
        Ok(out)
    }

    fn apply(
        &mut self,
        pred: &mut NodePredicate,
        key: &str,
        value: &str,
    ) -> Result<(), PatternError> {
        match key {
            "upos" => {
                pred.upos_in = Some(
                    value
                        .split('|')
                        .map(str::trim)
                        .filter(|t| !t.is_empty())
                        .map(str::to_string)
                        .collect(),
                )
            }
            "deprel" => {
                pred.deprel_in = Some(
                    parse_rels(value)
                        .ok_or_else(|| self.error(format!("bad relations {value:?}")))?,
                )
            }
            "form" => {
                let words = self.words(value)?;
                pred.form_in = Some(words.iter().map(|w| w.to_lowercase()).collect());
            }
            "lemma" => pred.lemma_in = Some(self.words(value)?.into_iter().collect()),
            "feats" => {
                for item in value.split('|') {
                    let (k, v) = item
                        .split_once('=')
                        .filter(|(k, v)| !k.is_empty() && !v.is_empty())
                        .ok_or_else(|| self.error(format!("bad feature {item:?}")))?;
                    pred.feats_require.push((k.trim().into(), v.trim().into()));
                }
            }
            "preceded_by" => pred.preceded_by = Some(PhraseList::from_entries(self.words(value)?)),
            "before" | "after" | "immediately_before" | "immediately_after" => {
                let order = match key {
                    "before" => Order::Before,
                    "after" => Order::After,
                    "immediately_before" => Order::ImmediatelyBefore,
                    _ => Order::ImmediatelyAfter,
                };
                if value.is_empty() || !value.chars().all(is_name_char) {
                    return Err(self.error(format!("bad node name {value:?}")));
                }
                pred.position.push(PositionConstraint {
                    order,
                    other: value.into(),
                });
            }
            other => return Err(self.error(format!("unknown attribute {other:?}"))),
        }
        Ok(())
    }
}

fn parse_rels(text: &str) -> Option<RelSet> {
    let mut out = Vec::new();
    for item in text.split('|').map(str::trim) {
        let (exact, label) = match item.strip_prefix('=') {
            Some(l) => (true, l),
            None => (false, item),
        };
        if label.is_empty() || !label.chars().all(is_label_char) {
            return None;
        }
        out.push(RelSpec {
            label: label.into(),
            exact,
        });
    }
    Some(RelSet(out))
}
