//! Independent oracles shared by the acceptance report and the integration
//! tests. Each `check_*` returns a one-line summary or a failure message.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use fict_core::conllu::{parse_str, Features, Sentence, Token};
use fict_core::corpus::{build_vocab, downsample, select_indices};
use fict_core::eval::{acc_delta, paired_t, pearson, tse_accuracy, MinimalPair, ModelKey, FULL};
use fict_core::filters::{apply_filter, Registry};
use fict_core::lm::{perplexity, NgramModel, ScoreTable, SentenceScore, UniformScorer};
use fict_core::pipeline::{self, run_toy, RunConfig, ToyOptions};
use fict_core::synth;
use fict_core::treequery::{
    EdgeKind, NodePredicate, Order, PhraseList, RelSet, RelSpec, TreePattern,
};

pub type Check = Result<String, String>;

/// xorshift64*: deliberately unrelated to the library's sampling RNG.
pub struct XorShift(u64);

impl XorShift {
    pub fn new(seed: u64) -> Self {
        XorShift(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1)
    }

    pub fn next(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next() % n as u64) as usize
    }

    pub fn chance(&mut self, num: u64, den: u64) -> bool {
        self.next() % den < num
    }

    pub fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        &xs[self.below(xs.len())]
    }

    /// Uniform in [0, 1).
    pub fn unit(&mut self) -> f64 {
        (self.next() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn subset<T: Clone>(&mut self, xs: &[T]) -> Vec<T> {
        loop {
            let s: Vec<T> = xs.iter().filter(|_| self.chance(1, 3)).cloned().collect();
            if !s.is_empty() {
                return s;
            }
        }
    }
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

// ---------------------------------------------------------------- golden

/// `# expect_discard = a b` (or `none`) from a fixture block.
pub fn expected_discards(s: &Sentence) -> Option<BTreeSet<String>> {
    s.raw_lines().iter().find_map(|l| {
        let v = l.strip_prefix("# expect_discard =")?.trim();
        Some(if v == "none" {
            BTreeSet::new()
        } else {
            v.split_whitespace().map(String::from).collect()
        })
    })
}

pub fn check_golden_filters() -> Check {
    let text = fs::read_to_string(fixture("golden.conllu")).map_err(|e| e.to_string())?;
    let sentences = parse_str(&text).map_err(|e| e.to_string())?;
    let registry = Registry::builtin();
    let names: BTreeSet<&str> = registry.names().into_iter().collect();
    let mut pos: BTreeMap<&str, usize> = BTreeMap::new();
    let mut neg: BTreeMap<&str, usize> = BTreeMap::new();
    let mut mismatches = Vec::new();
    for s in &sentences {
        let id = s.sent_id().unwrap_or("?");
        let want = expected_discards(s).ok_or_else(|| format!("{id}: no expect_discard label"))?;
        if let Some(bad) = want.iter().find(|w| !names.contains(w.as_str())) {
            return Err(format!("{id}: unknown filter {bad:?} in label"));
        }
        for spec in registry.specs() {
            let expected = want.contains(&spec.name);
            *if expected { &mut pos } else { &mut neg }
                .entry(&spec.name)
                .or_default() += 1;
            if spec.discards(s) != expected {
                mismatches.push(format!(
                    "{id}/{} (expected {})",
                    spec.name,
                    if expected { "discard" } else { "keep" }
                ));
            }
        }
    }
    if sentences.len() < 60 {
        return Err(format!(
            "fixture has {} sentences, need >= 60",
            sentences.len()
        ));
    }
    for n in &names {
        let (p, q) = (
            pos.get(n).copied().unwrap_or(0),
            neg.get(n).copied().unwrap_or(0),
        );
        if p < 2 || q < 2 {
            return Err(format!(
                "{n}: {p} positive / {q} negative cases, need >= 2 each"
            ));
        }
    }
    if !mismatches.is_empty() {
        return Err(format!(
            "{} mismatches: {}",
            mismatches.len(),
            mismatches.join(", ")
        ));
    }
    Ok(format!(
        "{} sentences x {} filters, 0 mismatches",
        sentences.len(),
        names.len()
    ))
}

// ---------------------------------------------------------------- matcher

const FORMS: [&str; 6] = ["the", "dog", "Dogs", "ran", "of", "a"];
const UPOS: [&str; 4] = ["NOUN", "VERB", "DET", "ADP"];
const DEPRELS: [&str; 6] = ["nsubj", "obj", "det", "nmod", "nmod:poss", "case"];
const RELS: [&str; 5] = ["nsubj", "obj", "nmod", "nmod:poss", "case"];

pub fn random_sentence(rng: &mut XorShift) -> Sentence {
    let n = 1 + rng.below(8);
    // attach tokens in a random order, each to an already attached one
    let mut order: Vec<u32> = (1..=n as u32).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.below(i + 1));
    }
    let mut heads = vec![0u32; n + 1];
    for i in 1..n {
        heads[order[i] as usize] = order[rng.below(i)];
    }
    let tokens = (1..=n as u32)
        .map(|id| {
            let form = rng.pick(&FORMS).to_string();
            let feats = match rng.below(3) {
                0 => Features::default(),
                1 => Features::new(vec![("Number".into(), "Sing".into())]),
                _ => Features::new(vec![("Number".into(), "Plur".into())]),
            };
            let head = heads[id as usize];
            Token {
                id,
                lemma: if rng.chance(1, 2) {
                    form.to_lowercase()
                } else {
                    form.clone()
                },
                form,
                upos: rng.pick(&UPOS).to_string(),
                xpos: "_".into(),
                feats,
                head,
                deprel: if head == 0 {
                    "root".into()
                } else {
                    rng.pick(&DEPRELS).to_string()
                },
            }
        })
        .collect();
    Sentence::from_tokens(tokens, &[]).expect("random tree is valid")
}

pub fn random_predicate(rng: &mut XorShift, names: &[String], me: usize) -> NodePredicate {
    loop {
        let mut p = NodePredicate::default();
        if rng.chance(1, 3) {
            p.upos_in = Some(rng.subset(&UPOS).iter().map(|s| s.to_string()).collect());
        }
        if rng.chance(1, 4) {
            p.deprel_in = Some(RelSet(
                rng.subset(&RELS)
                    .into_iter()
                    .map(|l| RelSpec {
                        label: l.into(),
                        exact: rng.chance(1, 3),
                    })
                    .collect(),
            ));
        }
        if rng.chance(1, 5) {
            p = p.forms(&rng.subset(&FORMS));
        }
        if rng.chance(1, 6) {
            p = p.lemmas(&rng.subset(&FORMS));
        }
        if rng.chance(1, 5) {
            p = p.feat("Number", rng.pick(&["Sing", "Plur"]));
        }
        if rng.chance(1, 8) {
            let entries = [*rng.pick(&FORMS), "the dog", "of a"];
            p.preceded_by = Some(PhraseList::from_entries(rng.subset(&entries)));
        }
        if names.len() > 1 && rng.chance(1, 3) {
            let mut other = rng.below(names.len());
            if other == me {
                other = (other + 1) % names.len();
            }
            let order = *rng.pick(&[
                Order::Before,
                Order::After,
                Order::ImmediatelyBefore,
                Order::ImmediatelyAfter,
            ]);
            p = p.at(order, &names[other]);
        }
        if !p.is_unconstrained() {
            return p;
        }
    }
}

/// A pattern of 1..=4 nodes with its independent description for the oracle.
pub struct RandomPattern {
    pub pattern: TreePattern,
    pub preds: Vec<NodePredicate>,
    /// (parent, child, kind)
    pub edges: Vec<(usize, usize, EdgeKind)>,
}

pub fn random_pattern(rng: &mut XorShift) -> RandomPattern {
    let k = 1 + rng.below(4);
    let names: Vec<String> = (0..k).map(|i| format!("n{i}")).collect();
    let preds: Vec<NodePredicate> = (0..k).map(|i| random_predicate(rng, &names, i)).collect();
    // random tree over the nodes: node i > 0 hangs below an earlier node,
    // then the declaration order is shuffled so the root is not always n0
    let mut edges = Vec::new();
    for c in 1..k {
        let p = rng.below(c);
        let kind = match rng.below(4) {
            0 => EdgeKind::Child(None),
            1 => EdgeKind::Child(Some(RelSet(vec![RelSpec {
                label: rng.pick(&RELS).to_string(),
                exact: rng.chance(1, 2),
            }]))),
            2 => EdgeKind::Descendant { max_depth: None },
            _ => EdgeKind::Descendant {
                max_depth: Some(1 + rng.below(3) as u32),
            },
        };
        edges.push((p, c, kind));
    }
    let mut perm: Vec<usize> = (0..k).collect();
    for i in (1..k).rev() {
        perm.swap(i, rng.below(i + 1));
    }
    // node originally i is declared as perm[i]; positions refer by name, so
    // rename the targets as well
    let mut declared: Vec<Option<NodePredicate>> = vec![None; k];
    for (i, p) in preds.into_iter().enumerate() {
        let mut p = p;
        for pc in &mut p.position {
            let orig: usize = pc.other[1..].parse().unwrap();
            pc.other = names[perm[orig]].clone();
        }
        declared[perm[i]] = Some(p);
    }
    let preds: Vec<NodePredicate> = declared.into_iter().map(Option::unwrap).collect();
    let edges: Vec<(usize, usize, EdgeKind)> = edges
        .into_iter()
        .map(|(p, c, e)| (perm[p], perm[c], e))
        .collect();
    let mut b = TreePattern::builder();
    for (i, p) in preds.iter().enumerate() {
        b = b.node(&names[i], p.clone());
    }
    for (p, c, kind) in &edges {
        b = b.edge(&names[*p], &names[*c], kind.clone());
    }
    RandomPattern {
        pattern: b.build().expect("random pattern is a valid tree"),
        preds,
        edges,
    }
}

fn rel_ok(spec: &RelSpec, deprel: &str) -> bool {
    if spec.exact {
        return deprel == spec.label;
    }
    let base = deprel.split(':').next().unwrap();
    deprel == spec.label || (base == spec.label && deprel.contains(':'))
}

fn token_ok(s: &Sentence, p: &NodePredicate, t: &Token) -> bool {
    p.upos_in.as_ref().is_none_or(|u| u.contains(&t.upos))
        && p.deprel_in
            .as_ref()
            .is_none_or(|r| r.0.iter().any(|x| rel_ok(x, &t.deprel)))
        && p.form_in
            .as_ref()
            .is_none_or(|f| f.contains(&t.form.to_lowercase()))
        && p.lemma_in.as_ref().is_none_or(|l| l.contains(&t.lemma))
        && p.feats_require
            .iter()
            .all(|(k, v)| t.feats.iter().any(|(a, b)| a == k && b == v))
        && p.preceded_by.as_ref().is_none_or(|ph| {
            let before: Vec<String> = s.tokens()[..t.id as usize - 1]
                .iter()
                .map(|x| x.form.to_lowercase())
                .collect();
            ph.0.iter()
                .any(|w| before.len() >= w.len() && before[before.len() - w.len()..] == w[..])
        })
}

fn edge_ok(s: &Sentence, parent: u32, child: u32, kind: &EdgeKind) -> bool {
    let c = s.token(child).unwrap();
    match kind {
        EdgeKind::Child(rels) => {
            c.head == parent
                && rels
                    .as_ref()
                    .is_none_or(|r| r.0.iter().any(|x| rel_ok(x, &c.deprel)))
        }
        EdgeKind::Descendant { max_depth } => {
            let (mut cur, mut depth) = (c.head, 1u32);
            while cur != 0 {
                if cur == parent {
                    return max_depth.is_none_or(|m| depth <= m);
                }
                cur = s.token(cur).unwrap().head;
                depth += 1;
            }
            false
        }
    }
}

/// Every injective assignment, checked constraint by constraint.
pub fn brute_force(s: &Sentence, rp: &RandomPattern) -> Vec<Vec<u32>> {
    let k = rp.preds.len();
    let n = s.len() as u32;
    let names: Vec<String> = (0..k).map(|i| format!("n{i}")).collect();
    let mut out = Vec::new();
    let mut ids = vec![1u32; k];
    loop {
        let distinct = ids.iter().collect::<BTreeSet<_>>().len() == k;
        if distinct
            && (0..k).all(|i| token_ok(s, &rp.preds[i], s.token(ids[i]).unwrap()))
            && rp
                .edges
                .iter()
                .all(|(p, c, e)| edge_ok(s, ids[*p], ids[*c], e))
            && (0..k).all(|i| {
                rp.preds[i].position.iter().all(|pc| {
                    let j = names.iter().position(|x| *x == pc.other).unwrap();
                    let (a, b) = (ids[i] as i64, ids[j] as i64);
                    match pc.order {
                        Order::Before => a < b,
                        Order::After => a > b,
                        Order::ImmediatelyBefore => b - a == 1,
                        Order::ImmediatelyAfter => a - b == 1,
                    }
                })
            })
        {
            out.push(ids.clone());
        }
        // odometer
        let mut i = 0;
        loop {
            if i == k {
                return out;
            }
            ids[i] += 1;
            if ids[i] <= n {
                break;
            }
            ids[i] = 1;
            i += 1;
        }
    }
}

pub fn check_matcher_oracle(trials: u64) -> Check {
    let mut rng = XorShift::new(2024);
    let (mut matched, mut bindings) = (0u64, 0usize);
    for trial in 0..trials {
        let s = random_sentence(&mut rng);
        let rp = random_pattern(&mut rng);
        let mut want = brute_force(&s, &rp);
        want.sort();
        let got: Vec<Vec<u32>> = rp.pattern.find_all(&s).iter().map(|b| b.ids()).collect();
        if got != want {
            return Err(format!(
                "trial {trial}: find_all {got:?} != oracle {want:?}\n{}pattern {:?}",
                s.to_conllu(),
                rp.pattern
            ));
        }
        if rp.pattern.is_match(&s) != !want.is_empty() {
            return Err(format!("trial {trial}: is_match disagrees with oracle"));
        }
        matched += u64::from(!want.is_empty());
        bindings += want.len();
    }
    Ok(format!(
        "{trials} trials agree ({matched} matching, {bindings} bindings)"
    ))
}

// ---------------------------------------------------------------- partition

pub fn check_partition(n: usize) -> Check {
    // random trees rarely hit every construction, so every 20th sentence is
    // replaced by a golden fixture sentence
    let golden =
        parse_str(&fs::read_to_string(fixture("golden.conllu")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let mut corpus = synth::random_corpus(n, 11);
    for (i, s) in corpus.iter_mut().enumerate().filter(|(i, _)| i % 20 == 0) {
        *s = golden[(i / 20) % golden.len()].clone();
    }
    let registry = Registry::builtin();
    let mut discarded = Vec::new();
    for spec in registry.specs() {
        let out = apply_filter(corpus.iter().cloned(), spec);
        if out.kept.len() + out.discarded.len() != corpus.len() {
            return Err(format!("{}: kept + discarded != input", spec.name));
        }
        if out.stats.input_sentences != n as u64
            || out.stats.discarded_sentences != out.discarded.len() as u64
        {
            return Err(format!("{}: stats disagree with the streams", spec.name));
        }
        // order preserved: interleaving kept and discarded gives the input back
        let (mut k, mut d) = (out.kept.iter().peekable(), out.discarded.iter().peekable());
        for s in &corpus {
            if k.peek() == Some(&s) {
                k.next();
            } else if d.peek() == Some(&s) {
                d.next();
            } else {
                return Err(format!("{}: output order differs from input", spec.name));
            }
        }
        let again = apply_filter(out.kept.iter().cloned(), spec);
        if !again.discarded.is_empty() {
            return Err(format!(
                "{}: re-filtering kept discards {}",
                spec.name,
                again.discarded.len()
            ));
        }
        discarded.push(out.discarded.len());
    }
    let min = *discarded.iter().min().unwrap();
    if min == 0 {
        return Err("some filter discards nothing, so idempotence is untested for it".into());
    }
    Ok(format!(
        "{} filters over {n} sentences; each discards {min}..={}, re-filtering discards 0",
        discarded.len(),
        discarded.iter().max().unwrap()
    ))
}

// ---------------------------------------------------------------- downsampling

pub fn check_downsampling(seeds: u64) -> Check {
    let corpus: String = (0..500).map(|i| format!("line {i} w{}\n", i % 7)).collect();
    let (a, ma) = downsample(corpus.as_bytes(), 120, 9).map_err(|e| e.to_string())?;
    let (b, _) = downsample(corpus.as_bytes(), 120, 9).map_err(|e| e.to_string())?;
    if a != b {
        return Err("same seed produced different bytes".into());
    }
    let (c, _) = downsample(corpus.as_bytes(), 120, 10).map_err(|e| e.to_string())?;
    if a == c {
        return Err("different seeds produced identical samples".into());
    }
    let out = String::from_utf8(a).unwrap();
    let lines: Vec<&str> = out.lines().collect();
    if lines.len() != 120 {
        return Err(format!("{} lines, expected 120", lines.len()));
    }
    // order preservation: the sample is the subsequence at the manifest indices
    let src: Vec<&str> = corpus.lines().collect();
    let expected: Vec<&str> = ma.indices.iter().map(|&i| src[i as usize]).collect();
    if lines != expected || ma.indices.windows(2).any(|w| w[0] >= w[1]) {
        return Err("sample is not the ordered subsequence at the chosen indices".into());
    }
    let mut hits = [0u64; 20];
    for seed in 0..seeds {
        let idx = select_indices(20, 5, seed).map_err(|e| e.to_string())?;
        if idx.len() != 5 {
            return Err(format!("seed {seed}: {} indices", idx.len()));
        }
        for i in idx {
            hits[i as usize] += 1;
        }
    }
    let freqs: Vec<f64> = hits.iter().map(|&h| h as f64 / seeds as f64).collect();
    let (lo, hi) = freqs
        .iter()
        .fold((1.0f64, 0.0f64), |(l, h), &f| (l.min(f), h.max(f)));
    if lo < 0.23 || hi > 0.27 {
        return Err(format!(
            "inclusion frequencies span [{lo:.4}, {hi:.4}], outside 0.25 +- 0.02"
        ));
    }
    Ok(format!(
        "deterministic, 120/500 lines in order; 20-choose-5 inclusion in [{lo:.4}, {hi:.4}] over {seeds} seeds"
    ))
}

// ---------------------------------------------------------------- KN

pub fn fixture_lines() -> Vec<String> {
    let mut rng = XorShift::new(5);
    let words = [
        "the", "dog", "dogs", "cat", "runs", "run", "sees", "a", "of", "big",
    ];
    (0..400)
        .map(|_| {
            let n = 1 + rng.below(9);
            (0..n)
                .map(|_| *rng.pick(&words))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

pub fn check_kn() -> Check {
    let lines = fixture_lines();
    // vocab smaller than the word set, so <unk> is exercised
    let vocab = build_vocab(&lines, 8).map_err(|e| e.to_string())?;
    let v = vocab.size() as u32;
    let model = NgramModel::train(&lines, 3, &[0.6, 0.7, 0.8], vocab).map_err(|e| e.to_string())?;
    let mut rng = XorShift::new(77);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        // ids 0..v are vocabulary entries, v is the begin marker
        let len = rng.below(4);
        let h: Vec<u32> = (0..len).map(|_| rng.below(v as usize + 1) as u32).collect();
        let sum: f64 = (0..v).map(|w| model.prob_ids(&h, w)).sum();
        worst = worst.max((sum - 1.0).abs());
    }
    if worst > 1e-6 {
        return Err(format!("max |sum P(w|h) - 1| = {worst:e}"));
    }

    // Uniform unigram: every item, <unk> and <eos> equally frequent.
    let uni_lines: Vec<String> = (0..30).map(|i| format!("a b c d oov{i}")).collect();
    let uv = build_vocab(&["a b c d"], 4).map_err(|e| e.to_string())?;
    let size = uv.size() as f64;
    let unigram = NgramModel::train(&uni_lines, 1, &[0.75], uv).map_err(|e| e.to_string())?;
    let eval: Vec<String> = (0..20).map(|i| format!("d a zz{i} b")).collect();
    for (name, ppl) in [
        (
            "KN unigram",
            perplexity(&unigram, &eval).map_err(|e| e.to_string())?,
        ),
        (
            "uniform scorer",
            perplexity(
                &UniformScorer {
                    size: size as usize,
                },
                &eval,
            )
            .map_err(|e| e.to_string())?,
        ),
    ] {
        if ((ppl - size) / size).abs() > 1e-9 {
            return Err(format!("{name} perplexity {ppl} != |V| = {size}"));
        }
    }

    let mut buf = Vec::new();
    model.write(&mut buf).map_err(|e| e.to_string())?;
    let back = NgramModel::read(&buf[..]).map_err(|e| e.to_string())?;
    for l in lines.iter().take(100).chain(eval.iter()) {
        let t: Vec<&str> = l.split_whitespace().collect();
        let (a, b) = (
            model.score_tokens(&t).unwrap(),
            back.score_tokens(&t).unwrap(),
        );
        if a.iter()
            .map(|x| x.to_bits())
            .ne(b.iter().map(|x| x.to_bits()))
        {
            return Err(format!("scores differ after round trip on {l:?}"));
        }
    }
    Ok(format!(
        "50 histories sum to 1 (max err {worst:.1e}); uniform perplexity = |V| = {size}; round trip bit-exact"
    ))
}

// ---------------------------------------------------------------- metrics

/// Two-sided Student t p-value by composite Simpson integration of the
/// density, with the normalizing constant from closed-form gamma values.
pub fn t_p_by_quadrature(t: f64, df: u32) -> f64 {
    fn gamma_half(n2: u32) -> f64 {
        // Γ(n2 / 2) for positive integer n2
        if n2.is_multiple_of(2) {
            (1..n2 / 2).map(f64::from).product()
        } else {
            let mut g = std::f64::consts::PI.sqrt();
            let mut x = 0.5;
            while x < n2 as f64 / 2.0 - 0.25 {
                g *= x;
                x += 1.0;
            }
            g
        }
    }
    let nu = df as f64;
    let c = gamma_half(df + 1) / ((nu * std::f64::consts::PI).sqrt() * gamma_half(df));
    let f = |x: f64| c * (1.0 + x * x / nu).powf(-(nu + 1.0) / 2.0);
    let steps = 200_000;
    let h = t.abs() / steps as f64;
    let mut s = f(0.0) + f(t.abs());
    for i in 1..steps {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    1.0 - 2.0 * s * h / 3.0
}

pub fn check_metrics(sets: usize) -> Check {
    let mut rng = XorShift::new(99);
    let registry = Registry::builtin();
    let key = ModelKey::new("m", FULL, 1, &registry).map_err(|e| e.to_string())?;
    for set in 0..sets {
        let n = 1 + rng.below(30);
        let mut table = BTreeMap::new();
        let mut pairs = Vec::new();
        let mut wins = 0;
        for i in 0..n {
            let p = MinimalPair {
                pair_id: format!("p{i}"),
                benchmark: "b".into(),
                good: "x y".into(),
                bad: "x z".into(),
            };
            let g = -(rng.below(6) as f64) - 0.5;
            let b = if rng.chance(1, 4) {
                g
            } else {
                -(rng.below(6) as f64) - 0.5
            };
            wins += usize::from(g > b);
            for (id, lp) in [(p.good_id(), g), (p.bad_id(), b)] {
                table.insert(
                    id.clone(),
                    SentenceScore {
                        sentence_id: id,
                        total_logprob: lp,
                        token_count: 3,
                        token_logprobs: None,
                    },
                );
            }
            pairs.push(p);
        }
        let r = tse_accuracy(&ScoreTable(table), &pairs, &key).map_err(|e| e.to_string())?;
        if r.accuracy != wins as f64 / n as f64 {
            return Err(format!("set {set}: accuracy {} != {wins}/{n}", r.accuracy));
        }
    }
    for _ in 0..100 {
        let x = rng.unit() * 100.0;
        let d = acc_delta(x, &vec![x; 1 + rng.below(5)]).map_err(|e| e.to_string())?;
        if d != 0.0 {
            return Err(format!("acc_delta({x}, [x..]) = {d}"));
        }
    }
    let x: Vec<f64> = (0..50).map(|_| rng.unit() * 10.0 - 5.0).collect();
    let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
    let r = pearson(&x, &y).map_err(|e| e.to_string())?;
    if (r - 1.0).abs() > 1e-12 {
        return Err(format!("pearson(x, 2x+1) = {r}"));
    }

    // differences 1..6: mean 3.5, variance 3.5, so t = 3.5 / sqrt(3.5 / 6) = sqrt(21)
    let y6 = [10.2, 11.7, 9.4, 12.0, 10.9, 11.3];
    let x6: Vec<f64> = y6.iter().zip(1..=6).map(|(b, d)| b + d as f64).collect();
    let tt = paired_t(&x6, &y6).map_err(|e| e.to_string())?;
    let rev = paired_t(&y6, &x6).map_err(|e| e.to_string())?;
    let p_ref = t_p_by_quadrature(21f64.sqrt(), 5);
    if (tt.t - 21f64.sqrt()).abs() > 1e-6 || tt.df != 5.0 {
        return Err(format!(
            "t = {} (df {}), expected sqrt(21) = {}",
            tt.t,
            tt.df,
            21f64.sqrt()
        ));
    }
    if (tt.p - p_ref).abs() > 1e-6 {
        return Err(format!("p = {} vs quadrature {p_ref}", tt.p));
    }
    if (rev.t + tt.t).abs() > 1e-12 || (rev.p - tt.p).abs() > 1e-12 {
        return Err("swapping x and y does not negate t with p unchanged".into());
    }
    if paired_t(&y6.iter().map(|v| v + 2.5).collect::<Vec<_>>(), &y6).is_ok() {
        return Err("constant differences did not raise the degenerate-test error".into());
    }
    Ok(format!(
        "{sets} score sets counted exactly; t = sqrt(21), p = {:.8} (quadrature {p_ref:.8})",
        tt.p
    ))
}

// ---------------------------------------------------------------- toy

pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(
                    p.strip_prefix(dir).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                );
            }
        }
    }
    out
}

/// Per-cell recomputation from results.jsonl: the seed-mean of filtered
/// accuracies (recounted from the stored PΔs) minus the seed-mean of full
/// ones, in percentage points.
pub fn recompute_cell(results: &str, corpus: &str, benchmark: &str) -> Option<f64> {
    let mut full = Vec::new();
    let mut filtered = Vec::new();
    for line in results.lines() {
        let v: serde_json::Value = serde_json::from_str(line).ok()?;
        if v["benchmark"] != benchmark {
            continue;
        }
        let deltas = v["p_deltas"].as_array()?;
        let acc = 100.0 * deltas.iter().filter(|d| d.as_f64().unwrap() > 0.0).count() as f64
            / deltas.len() as f64;
        match v["model"]["corpus"].as_str()? {
            c if c == FULL => full.push(acc),
            c if c == corpus => filtered.push(acc),
            _ => {}
        }
    }
    if full.is_empty() || filtered.is_empty() {
        return None;
    }
    let m = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    Some(m(&filtered) - m(&full))
}

pub fn check_toy(dir: &Path) -> Check {
    let opts = ToyOptions::default();
    run_toy(dir, &opts).map_err(|e| e.to_string())?;
    let first = snapshot(dir);
    run_toy(dir, &opts).map_err(|e| e.to_string())?;
    let second = snapshot(dir);
    if first != second {
        let diff: Vec<_> = first
            .keys()
            .chain(second.keys())
            .filter(|k| first.get(*k) != second.get(*k))
            .collect();
        return Err(format!("rerun changed {diff:?}"));
    }
    let report = dir.join("report");
    for f in [
        "acc_delta.csv",
        "acc_delta_matrix.csv",
        "accuracy.csv",
        "p_delta.csv",
        "perplexity.csv",
        "missing.csv",
        "summary.txt",
    ] {
        for p in [report.join(f), pipeline::meta_path(&report.join(f))] {
            if !p.exists() {
                return Err(format!("missing report file {}", p.display()));
            }
        }
    }
    let matrix = fs::read_to_string(report.join("acc_delta_matrix.csv")).unwrap();
    let mut rows = matrix.lines();
    let header: Vec<&str> = rows.next().unwrap_or("").split(',').collect();
    let col = header
        .iter()
        .position(|h| *h == synth::PP_BENCHMARK)
        .ok_or("targeted benchmark column missing")?;
    let row = rows
        .map(|r| r.split(',').collect::<Vec<_>>())
        .find(|r| r.get(1) == Some(&"agr-pp-mod"))
        .ok_or("agr-pp-mod row missing")?;
    let cell = row[col];
    let value: f64 = cell
        .strip_suffix('*')
        .ok_or_else(|| format!("targeted cell {cell:?} is not flagged"))?
        .parse()
        .map_err(|_| format!("unparsable cell {cell:?}"))?;
    for (i, c) in row.iter().enumerate().skip(2) {
        if i != col && c.ends_with('*') {
            return Err(format!("untargeted cell {} flagged", header[i]));
        }
    }
    let results = fs::read_to_string(dir.join("eval/results.jsonl")).unwrap();
    for (i, c) in row.iter().enumerate().skip(2) {
        let want =
            recompute_cell(&results, "agr-pp-mod", header[i]).ok_or("recomputation failed")?;
        let got: f64 = c.trim_end_matches('*').parse().unwrap();
        if (got - want).abs() > 5e-5 {
            return Err(format!(
                "cell {}: report {got} vs recomputed {want}",
                header[i]
            ));
        }
    }
    if value > 0.0 {
        return Err(format!("targeted accDelta {value} > 0"));
    }
    Ok(format!(
        "targeted accDelta {value:.4} (flagged, <= 0, matches recomputation); {} files byte-stable across reruns",
        second.len()
    ))
}

// ---------------------------------------------------------------- reference corpus

pub const REFERENCE_ENV: &str = "FICT_REFERENCE_CONLLU";

/// Reference percentages of sentences filtered on the parsed English
/// Wikipedia LM training corpus.
pub const REFERENCE_PCT: [(&str, f64); 15] = [
    ("agr-pp-mod", 18.50),
    ("agr-rel-cl", 2.76),
    ("agr-re-irr-sv", 11.29),
    ("npi-only", 0.09),
    ("npi-sent-neg", 0.45),
    ("npi-sim-ques", 0.01),
    ("quantifier-superlative", 7.29),
    ("quantifier-existential-there", 1.15),
    ("binding-c-command", 0.01),
    ("binding-case", 1.54),
    ("binding-domain", 0.44),
    ("binding-reconstruction", 0.01),
    ("passive", 2.67),
    ("det-adj-noun", 1.14),
    ("det-noun", 0.47),
];

pub const REFERENCE_TOLERANCE_PP: f64 = 2.0;

pub fn check_reference_corpus(conllu: &Path, out_dir: &Path) -> Check {
    let cfg = RunConfig::new()
        .with("conllu", conllu.display().to_string())
        .and_then(|c| c.with("out_dir", out_dir.display().to_string()))
        .and_then(|c| c.with("filters", "all"))
        .map_err(|e| e.to_string())?;
    pipeline::cmd_filter(&cfg).map_err(|e| e.to_string())?;
    let csv = fs::read_to_string(out_dir.join("filter_stats.csv")).map_err(|e| e.to_string())?;
    let got: BTreeMap<&str, f64> = csv
        .lines()
        .skip(1)
        .filter_map(|l| {
            let mut f = l.split(',');
            Some((f.next()?, f.next()?.parse().ok()?))
        })
        .collect();
    let mut off = Vec::new();
    let mut worst = 0.0f64;
    for (name, want) in REFERENCE_PCT {
        let g = *got
            .get(name)
            .ok_or_else(|| format!("{name} missing from filter_stats.csv"))?;
        worst = worst.max((g - want).abs());
        if (g - want).abs() > REFERENCE_TOLERANCE_PP {
            off.push(format!("{name} {g:.2} vs {want:.2}"));
        }
    }
    if !off.is_empty() {
        return Err(format!(
            "outside +-{REFERENCE_TOLERANCE_PP} pp: {}",
            off.join("; ")
        ));
    }
    Ok(format!(
        "15 filters within +-{REFERENCE_TOLERANCE_PP} pp (max deviation {worst:.2})"
    ))
}
