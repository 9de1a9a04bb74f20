//! Streaming reader and writer for CoNLL-U dependency treebanks.
//!
//! Sentences are read one block at a time, so memory use is bounded by the
//! largest sentence rather than the corpus. Every sentence keeps its original
//! lines (comments, multiword-token ranges, empty nodes and the opaque
//! `DEPS`/`MISC` columns) so that writing it back is byte-identical to the
//! input block.

use std::fmt;
use std::io::{self, BufRead, Write};

use thiserror::Error;

/// Morphological features of a token, in the order they were written.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Features(Vec<(String, String)>);

impl Features {
    pub fn new(pairs: Vec<(String, String)>) -> Self {
        Features(pairs)
    }

    /// Parses the `FEATS` column (`_` or `Key=Value|Key=Value`).
    pub fn parse(column: &str) -> Option<Self> {
        if column == "_" {
            return Some(Features::default());
        }
        let mut pairs = Vec::new();
        for item in column.split('|') {
            let (key, value) = item.split_once('=')?;
            if key.is_empty() || value.is_empty() {
                return None;
            }
            pairs.push((key.to_string(), value.to_string()));
        }
        Some(Features(pairs))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// True if `key` carries `value`; multi-valued features (`Case=Acc,Nom`)
    /// match any of their values.
    pub fn has(&self, key: &str, value: &str) -> bool {
        self.get(key)
            .is_some_and(|v| v.split(',').any(|part| part == value))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

impl fmt::Display for Features {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("_");
        }
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// One syntactic word of a sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub id: u32,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub feats: Features,
    /// 0 marks the root.
    pub head: u32,
    pub deprel: String,
}

impl Token {
    /// Relation label without its subtype (`nmod:poss` -> `nmod`).
    pub fn base_deprel(&self) -> &str {
        self.deprel.split(':').next().unwrap_or(&self.deprel)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("expected 10 tab-separated columns, found {0}")]
    ColumnCount(usize),
    #[error("invalid token id {0:?}")]
    InvalidId(String),
    #[error("invalid head {0:?}")]
    InvalidHead(String),
    #[error("invalid feature column {0:?}")]
    InvalidFeatures(String),
    #[error("empty {0} column")]
    EmptyField(&'static str),
    #[error("token id {found} out of sequence, expected {expected}")]
    IdGap { expected: u32, found: u32 },
    #[error("head {head} out of range for a sentence of {len} tokens")]
    HeadOutOfRange { head: u32, len: usize },
    #[error("token {0} is its own head")]
    SelfLoop(u32),
    #[error("sentence has no root token")]
    NoRoot,
    #[error("sentence has more than one root (tokens {0} and {1})")]
    MultipleRoots(u32, u32),
    #[error("token {0} is part of a head cycle")]
    Cycle(u32),
    #[error("sentence block contains no tokens")]
    Empty,
}

/// Malformed input, located by 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error)]
pub enum ConlluError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// A dependency-annotated sentence satisfying the tree invariants: ids run
/// 1..n, exactly one root, every head in range, no cycles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    tokens: Vec<Token>,
    raw_lines: Vec<String>,
    sent_id: Option<String>,
    children: Vec<Vec<u32>>,
}

impl Sentence {
    /// Builds a sentence from tokens and comment lines (with or without the
    /// leading `#`), generating 10-column lines with empty `DEPS`/`MISC`.
    pub fn from_tokens(tokens: Vec<Token>, comments: &[&str]) -> Result<Self, ParseErrorKind> {
        let mut raw_lines: Vec<String> = comments
            .iter()
            .map(|c| {
                if c.starts_with('#') {
                    c.to_string()
                } else {
                    format!("# {c}")
                }
            })
            .collect();
        for t in &tokens {
            raw_lines.push(format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t_\t_",
                t.id, t.form, t.lemma, t.upos, t.xpos, t.feats, t.head, t.deprel
            ));
        }
        check_tree(&tokens).map_err(|(_, kind)| kind)?;
        let sent_id = find_sent_id(&raw_lines);
        let children = child_index(&tokens);
        Ok(Sentence {
            tokens,
            raw_lines,
            sent_id,
            children,
        })
    }

    /// Shorthand for `(form, upos, head, deprel)` rows with lowercased
    /// lemmas and no features.
    pub fn from_rows(rows: &[(&str, &str, u32, &str)]) -> Result<Self, ParseErrorKind> {
        let tokens = rows
            .iter()
            .enumerate()
            .map(|(i, &(form, upos, head, deprel))| Token {
                id: i as u32 + 1,
                form: form.into(),
                lemma: form.to_lowercase(),
                upos: upos.into(),
                xpos: "_".into(),
                feats: Features::default(),
                head,
                deprel: deprel.into(),
            })
            .collect();
        Self::from_tokens(tokens, &[])
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token with the given 1-based id.
    pub fn token(&self, id: u32) -> Option<&Token> {
        id.checked_sub(1).and_then(|i| self.tokens.get(i as usize))
    }

    pub fn raw_lines(&self) -> &[String] {
        &self.raw_lines
    }

    pub fn sent_id(&self) -> Option<&str> {
        self.sent_id.as_deref()
    }

    /// Dependents of `id` (0 for the virtual root) in ascending order.
    pub fn children(&self, id: u32) -> &[u32] {
        self.children
            .get(id as usize)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn root(&self) -> u32 {
        self.children[0][0]
    }

    /// Word forms joined by single spaces: the one-sentence-per-line view.
    pub fn text(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&t.form);
        }
        out
    }

    /// The CoNLL-U block for this sentence, terminated by a blank line.
    pub fn to_conllu(&self) -> String {
        let mut out = String::new();
        for line in &self.raw_lines {
            out.push_str(line);
            out.push('\n');
        }
        out.push('\n');
        out
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        for line in &self.raw_lines {
            w.write_all(line.as_bytes())?;
            w.write_all(b"\n")?;
        }
        w.write_all(b"\n")
    }
}

fn find_sent_id(lines: &[String]) -> Option<String> {
    lines.iter().find_map(|l| {
        let rest = l.strip_prefix('#')?.trim_start();
        let value = rest
            .strip_prefix("sent_id")?
            .trim_start()
            .strip_prefix('=')?;
        Some(value.trim().to_string())
    })
}

fn child_index(tokens: &[Token]) -> Vec<Vec<u32>> {
    let mut children = vec![Vec::new(); tokens.len() + 1];
    for t in tokens {
        children[t.head as usize].push(t.id);
    }
    children
}

/// Validates the tree invariants, returning the index of the offending token.
fn check_tree(tokens: &[Token]) -> Result<(), (usize, ParseErrorKind)> {
    if tokens.is_empty() {
        return Err((0, ParseErrorKind::Empty));
    }
    let n = tokens.len();
    let mut root: Option<u32> = None;
    for (i, t) in tokens.iter().enumerate() {
        let expected = i as u32 + 1;
        if t.id != expected {
            return Err((
                i,
                ParseErrorKind::IdGap {
                    expected,
                    found: t.id,
                },
            ));
        }
        if t.deprel.is_empty() || t.deprel == "_" {
            return Err((i, ParseErrorKind::EmptyField("DEPREL")));
        }
        if t.head as usize > n {
            return Err((
                i,
                ParseErrorKind::HeadOutOfRange {
                    head: t.head,
                    len: n,
                },
            ));
        }
        if t.head == t.id {
            return Err((i, ParseErrorKind::SelfLoop(t.id)));
        }
        if t.head == 0 {
            if let Some(first) = root {
                return Err((i, ParseErrorKind::MultipleRoots(first, t.id)));
            }
            root = Some(t.id);
        }
    }
    if root.is_none() {
        return Err((0, ParseErrorKind::NoRoot));
    }
    // 0 = unvisited, 1 = on current path, 2 = reaches root
    let mut state = vec![0u8; n + 1];
    for start in 1..=n {
        let mut path = Vec::new();
        let mut cur = start;
        while cur != 0 && state[cur] == 0 {
            state[cur] = 1;
            path.push(cur);
            cur = tokens[cur - 1].head as usize;
        }
        if cur != 0 && state[cur] == 1 {
            return Err((cur - 1, ParseErrorKind::Cycle(cur as u32)));
        }
        for p in path {
            state[p] = 2;
        }
    }
    Ok(())
}

enum LineKind {
    Word(Token),
    Other,
}

fn parse_token_line(line: &str) -> Result<LineKind, ParseErrorKind> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 10 {
        return Err(ParseErrorKind::ColumnCount(cols.len()));
    }
    let id_col = cols[0];
    if let Some((a, b)) = id_col.split_once('-') {
        return match (a.parse::<u32>(), b.parse::<u32>()) {
            (Ok(a), Ok(b)) if a >= 1 && b > a => Ok(LineKind::Other),
            _ => Err(ParseErrorKind::InvalidId(id_col.to_string())),
        };
    }
    if let Some((a, b)) = id_col.split_once('.') {
        return match (a.parse::<u32>(), b.parse::<u32>()) {
            (Ok(_), Ok(b)) if b >= 1 => Ok(LineKind::Other),
            _ => Err(ParseErrorKind::InvalidId(id_col.to_string())),
        };
    }
    let id = match id_col.parse::<u32>() {
        Ok(id) if id >= 1 => id,
        _ => return Err(ParseErrorKind::InvalidId(id_col.to_string())),
    };
    let head = cols[6]
        .parse::<u32>()
        .map_err(|_| ParseErrorKind::InvalidHead(cols[6].to_string()))?;
    let feats =
        Features::parse(cols[5]).ok_or_else(|| ParseErrorKind::InvalidFeatures(cols[5].into()))?;
    if cols[1].is_empty() {
        return Err(ParseErrorKind::EmptyField("FORM"));
    }
    Ok(LineKind::Word(Token {
        id,
        form: cols[1].to_string(),
        lemma: cols[2].to_string(),
        upos: cols[3].to_string(),
        xpos: cols[4].to_string(),
        feats,
        head,
        deprel: cols[7].to_string(),
    }))
}

/// Parses one sentence block. `first_line` is the 1-based line number of
/// `lines[0]` and is used for error locations.
pub fn parse_block<S: AsRef<str>>(lines: &[S], first_line: usize) -> Result<Sentence, ParseError> {
    let mut tokens = Vec::new();
    let mut token_lines = Vec::new();
    let mut raw_lines = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        let line = line.as_ref();
        raw_lines.push(line.to_string());
        if line.starts_with('#') {
            continue;
        }
        let lineno = first_line + i;
        match parse_token_line(line).map_err(|kind| ParseError { line: lineno, kind })? {
            LineKind::Word(t) => {
                tokens.push(t);
                token_lines.push(lineno);
            }
            LineKind::Other => {}
        }
    }
    if let Err((idx, kind)) = check_tree(&tokens) {
        let line = token_lines.get(idx).copied().unwrap_or(first_line);
        return Err(ParseError { line, kind });
    }
    let sent_id = find_sent_id(&raw_lines);
    let children = child_index(&tokens);
    Ok(Sentence {
        tokens,
        raw_lines,
        sent_id,
        children,
    })
}

/// Whether malformed sentence blocks abort reading or are skipped and counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    #[default]
    Strict,
    Lenient,
}

/// Lazy sentence reader over any buffered source.
///
/// In [`ParseMode::Lenient`] malformed blocks are dropped and recorded in
/// [`Reader::skipped`]; I/O errors are always yielded.
pub struct Reader<R> {
    inner: R,
    mode: ParseMode,
    line_no: usize,
    buf: String,
    skipped: Vec<ParseError>,
    blocks: usize,
    done: bool,
}

impl<R: BufRead> Reader<R> {
    pub fn new(inner: R) -> Self {
        Self::with_mode(inner, ParseMode::Strict)
    }

    pub fn with_mode(inner: R, mode: ParseMode) -> Self {
        Reader {
            inner,
            mode,
            line_no: 0,
            buf: String::new(),
            skipped: Vec::new(),
            blocks: 0,
            done: false,
        }
    }

    /// Errors for the blocks dropped so far in lenient mode.
    pub fn skipped(&self) -> &[ParseError] {
        &self.skipped
    }

    /// Number of sentence blocks seen so far (parsed or skipped).
    pub fn blocks_read(&self) -> usize {
        self.blocks
    }

    fn next_line(&mut self) -> io::Result<Option<String>> {
        self.buf.clear();
        if self.inner.read_line(&mut self.buf)? == 0 {
            return Ok(None);
        }
        self.line_no += 1;
        let line = self.buf.strip_suffix('\n').unwrap_or(&self.buf);
        let line = line.strip_suffix('\r').unwrap_or(line);
        Ok(Some(line.to_string()))
    }

    fn next_block(&mut self) -> io::Result<Option<(Vec<String>, usize)>> {
        let mut lines = Vec::new();
        let mut first = 0;
        loop {
            match self.next_line()? {
                None => break,
                Some(line) if line.trim().is_empty() => {
                    if !lines.is_empty() {
                        break;
                    }
                }
                Some(line) => {
                    if lines.is_empty() {
                        first = self.line_no;
                    }
                    lines.push(line);
                }
            }
        }
        Ok(if lines.is_empty() {
            None
        } else {
            Some((lines, first))
        })
    }
}

impl<R: BufRead> Iterator for Reader<R> {
    type Item = Result<Sentence, ConlluError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            let (lines, first) = match self.next_block() {
                Ok(Some(block)) => block,
                Ok(None) => {
                    self.done = true;
                    return None;
                }
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            };
            self.blocks += 1;
            match parse_block(&lines, first) {
                Ok(s) => return Some(Ok(s)),
                Err(e) if self.mode == ParseMode::Lenient => self.skipped.push(e),
                Err(e) => return Some(Err(e.into())),
            }
        }
        None
    }
}

/// Parses a whole in-memory document.
pub fn parse_str(text: &str) -> Result<Vec<Sentence>, ConlluError> {
    Reader::new(text.as_bytes()).collect()
}
