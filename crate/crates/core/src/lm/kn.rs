//! Interpolated Kneser-Ney.
//!
//! Every sentence is padded with `order - 1` begin markers and closed by
//! `<eos>`. Level `k` tables hold, per context of `k - 1` ids, an adjusted
//! count `a(h, w)`: the raw count at the top level and the number of distinct
//! left extensions `|{v : a(v h, w) > 0}|` below it. With `A(h) = Σ_w a(h, w)`
//! and `T(h) = |{w : a(h, w) > 0}|`,
//!
//! ```text
//! P_k(w | h) = max(a(h, w) - D_k, 0) / A(h) + D_k T(h) / A(h) · P_{k-1}(w | h')
//! P_k(w | h) = P_{k-1}(w | h')                       when A(h) = 0
//! P_0(w)     = 1 / |V|
//! ```
//!
//! where `h'` drops the oldest id of `h`. Since every stored count is ≥ 1 and
//! `D_k < 1`, each level is a proper distribution over the closed vocabulary.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::corpus::Vocabulary;

use super::{LmError, SentenceScore, SentenceScorer};

pub const DEFAULT_DISCOUNT: f64 = 0.75;
pub const MODEL_HEADER: &str = "fict-kn-model v1";

#[derive(Debug, Clone, Default, PartialEq)]
struct Context {
    total: u64,
    words: HashMap<u32, u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    order: usize,
    discounts: Vec<f64>,
    vocab: Vocabulary,
    /// `levels[k - 1]`: contexts of length `k - 1`.
    levels: Vec<HashMap<Vec<u32>, Context>>,
}

impl NgramModel {
    /// Trains on whitespace-tokenized lines; tokens outside `vocab` count as
    /// `<unk>`. `discounts` has one entry per level (lowest first) or a single
    /// entry shared by all levels.
    pub fn train<S: AsRef<str>>(
        lines: &[S],
        order: usize,
        discounts: &[f64],
        vocab: Vocabulary,
    ) -> Result<Self, LmError> {
        if !(1..=5).contains(&order) {
            return Err(LmError::Order(order));
        }
        let discounts = match discounts.len() {
            1 => vec![discounts[0]; order],
            n if n == order => discounts.to_vec(),
            n => {
                return Err(LmError::DiscountCount {
                    expected: order,
                    found: n,
                })
            }
        };
        if let Some(&d) = discounts.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
            return Err(LmError::Discount(d));
        }
        let mut model = NgramModel {
            order,
            discounts,
            levels: vec![HashMap::new(); order],
            vocab,
        };
        let mut any = false;
        let mut seq = Vec::new();
        for line in lines {
            let line = line.as_ref();
            if line.split_whitespace().next().is_none() {
                continue;
            }
            any = true;
            model.padded(line.split_whitespace(), &mut seq);
            let top = &mut model.levels[order - 1];
            for i in order - 1..seq.len() {
                let ctx = &seq[i + 1 - order..i];
                let c = top.entry(ctx.to_vec()).or_default();
                c.total += 1;
                *c.words.entry(seq[i]).or_default() += 1;
            }
        }
        if !any {
            return Err(LmError::EmptyCorpus);
        }
        // Continuation counts: each distinct (v h, w) adds one to a(h, w).
        for k in (1..order).rev() {
            let (lower, upper) = model.levels.split_at_mut(k);
            let lower = &mut lower[k - 1];
            for (ctx, c) in upper[0].iter() {
                for &w in c.words.keys() {
                    let e = lower.entry(ctx[1..].to_vec()).or_default();
                    e.total += 1;
                    *e.words.entry(w).or_default() += 1;
                }
            }
        }
        Ok(model)
    }

    fn bos(&self) -> u32 {
        self.vocab.size() as u32
    }

    fn padded<'a>(&self, tokens: impl Iterator<Item = &'a str>, seq: &mut Vec<u32>) {
        seq.clear();
        seq.extend(std::iter::repeat_n(self.bos(), self.order - 1));
        seq.extend(tokens.map(|t| self.vocab.id(t)));
        seq.push(self.vocab.eos_id());
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn discounts(&self) -> &[f64] {
        &self.discounts
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// `P(w | history)` by id, using at most the last `order - 1` ids of the
    /// history. The begin-marker id is `vocab().size()`.
    pub fn prob_ids(&self, history: &[u32], w: u32) -> f64 {
        let n = history.len().min(self.order - 1);
        let h = &history[history.len() - n..];
        let mut p = 1.0 / self.vocab.size() as f64;
        // Lowest level first: level k uses the last k - 1 ids.
        for k in 1..=n + 1 {
            let ctx = &h[h.len() - (k - 1)..];
            if let Some(c) = self.levels[k - 1].get(ctx) {
                let d = self.discounts[k - 1];
                let a = c.words.get(&w).copied().unwrap_or(0) as f64;
                let total = c.total as f64;
                p = (a - d).max(0.0) / total + d * c.words.len() as f64 / total * p;
            }
        }
        p
    }

    /// `P(word | history)` over tokens; `history` may be shorter than the
    /// order, in which case begin markers are prepended.
    pub fn prob(&self, history: &[&str], word: &str) -> f64 {
        let mut ids: Vec<u32> = std::iter::repeat_n(self.bos(), self.order - 1).collect();
        ids.extend(history.iter().map(|t| self.vocab.id(t)));
        self.prob_ids(&ids, self.vocab.id(word))
    }

    /// Natural-log probabilities of each token and of the end marker.
    pub fn score_tokens(&self, tokens: &[&str]) -> Result<Vec<f64>, LmError> {
        if tokens.is_empty() {
            return Err(LmError::EmptySentence);
        }
        let mut seq = Vec::with_capacity(tokens.len() + self.order);
        self.padded(tokens.iter().copied(), &mut seq);
        Ok((self.order - 1..seq.len())
            .map(|i| self.prob_ids(&seq[..i], seq[i]).ln())
            .collect())
    }

    /// Text dump: header, order, discounts, vocabulary, then every level's
    /// `(context, word, count)` triples sorted by ids.
    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{MODEL_HEADER}")?;
        writeln!(w, "order {}", self.order)?;
        let ds: Vec<String> = self.discounts.iter().map(|d| format!("{d:?}")).collect();
        writeln!(w, "discounts {}", ds.join(" "))?;
        writeln!(w, "vocab {}", self.vocab.items().len())?;
        for it in self.vocab.items() {
            writeln!(w, "{it}")?;
        }
        for (k, level) in self.levels.iter().enumerate() {
            let mut rows: Vec<(&Vec<u32>, u32, u64)> = level
                .iter()
                .flat_map(|(ctx, c)| c.words.iter().map(move |(&w, &n)| (ctx, w, n)))
                .collect();
            rows.sort_unstable();
            writeln!(w, "level {} {}", k + 1, rows.len())?;
            for (ctx, word, n) in rows {
                for id in ctx {
                    write!(w, "{id} ")?;
                }
                writeln!(w, "{word} {n}")?;
            }
        }
        w.flush()
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self, LmError> {
        let mut lines = r.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, String), LmError> {
            match lines.next() {
                Some((i, Ok(l))) => Ok((i + 1, l)),
                Some((_, Err(e))) => Err(e.into()),
                None => Err(LmError::ModelFile {
                    line: 0,
                    message: format!("unexpected end, expected {what}"),
                }),
            }
        };
        let bad = |line: usize, message: &str| LmError::ModelFile {
            line,
            message: message.to_string(),
        };
        let (_, header) = next("header")?;
        if header != MODEL_HEADER {
            return Err(bad(1, "not a model file"));
        }
        let field = |l: &str, key: &str| l.strip_prefix(key).map(|v| v.trim().to_string());
        let (ln, l) = next("order")?;
        let order: usize = field(&l, "order ")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(ln, "bad order"))?;
        if !(1..=5).contains(&order) {
            return Err(bad(ln, "order out of range"));
        }
        let (ln, l) = next("discounts")?;
        let discounts: Vec<f64> = field(&l, "discounts ")
            .ok_or_else(|| bad(ln, "bad discounts"))?
            .split_whitespace()
            .map(|d| d.parse().map_err(|_| bad(ln, "bad discount")))
            .collect::<Result<_, _>>()?;
        if discounts.len() != order || discounts.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
            return Err(bad(ln, "discounts must be one per level, in (0, 1)"));
        }
        let (ln, l) = next("vocab")?;
        let n: usize = field(&l, "vocab ")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(ln, "bad vocab size"))?;
        let mut text = String::new();
        for _ in 0..n {
            text.push_str(&next("vocabulary entry")?.1);
            text.push('\n');
        }
        text.push_str(&format!("{}\n{}\n", crate::corpus::UNK, crate::corpus::EOS));
        let vocab = Vocabulary::read(text.as_bytes()).map_err(|e| bad(ln, &e.to_string()))?;
        let mut levels = vec![HashMap::new(); order];
        for (k, level) in levels.iter_mut().enumerate() {
            let (ln, l) = next("level")?;
            let rest = field(&l, &format!("level {} ", k + 1))
                .ok_or_else(|| bad(ln, "bad level header"))?;
            let rows: usize = rest.parse().map_err(|_| bad(ln, "bad row count"))?;
            for _ in 0..rows {
                let (ln, l) = next("count row")?;
                let nums: Vec<u64> = l
                    .split_whitespace()
                    .map(|x| x.parse().map_err(|_| bad(ln, "bad number")))
                    .collect::<Result<_, _>>()?;
                if nums.len() != k + 2 || nums[k + 1] == 0 {
                    return Err(bad(ln, "bad count row"));
                }
                let ctx: Vec<u32> = nums[..k].iter().map(|&x| x as u32).collect();
                let c: &mut Context = level.entry(ctx).or_default();
                c.total += nums[k + 1];
                c.words.insert(nums[k] as u32, nums[k + 1]);
            }
        }
        Ok(NgramModel {
            order,
            discounts,
            vocab,
            levels,
        })
    }
}

impl SentenceScorer for NgramModel {
    fn score(&self, id: &str, tokens: &[&str]) -> Result<SentenceScore, LmError> {
        Ok(SentenceScore::from_token_logprobs(
            id,
            self.score_tokens(tokens)?,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_vocab;

    fn ab_model(order: usize) -> NgramModel {
        let lines = vec!["a b"; 100];
        let vocab = build_vocab(&lines, 10).unwrap();
        NgramModel::train(&lines, order, &[DEFAULT_DISCOUNT], vocab).unwrap()
    }

    #[test]
    fn hand_computed_bigram() {
        // V = {a, b, <unk>, <eos>}. Bigram counts: (<s> a)=100, (a b)=100,
        // (b <eos>)=100. Continuation unigrams: a=1, b=1, <eos>=1, total 3.
        let m = ab_model(2);
        let d = 0.75;
        let uni = |a: f64, types: f64| (a - d).max(0.0) / 3.0 + d * types / 3.0 * 0.25;
        let p_a1 = uni(1.0, 3.0);
        let p_b1 = uni(1.0, 3.0);
        let p_e1 = uni(1.0, 3.0);
        let big = |a: f64, lower: f64| (a - d).max(0.0) / 100.0 + d * 1.0 / 100.0 * lower;
        let p_a = big(100.0, p_a1);
        let p_b_a = big(100.0, p_b1);
        let p_e_b = big(100.0, p_e1);
        assert!((m.prob(&[], "a") - p_a).abs() < 1e-15);
        assert!((m.prob(&["a"], "b") - p_b_a).abs() < 1e-15);
        assert!(p_b_a > 0.9);
        let s = m.score_tokens(&["a", "b"]).unwrap();
        assert_eq!(s.len(), 3);
        let total: f64 = s.iter().sum();
        assert!((total - (p_a.ln() + p_b_a.ln() + p_e_b.ln())).abs() < 1e-12);
        let ba: f64 = m.score_tokens(&["b", "a"]).unwrap().iter().sum();
        assert!(total > ba);
    }

    #[test]
    fn unigram_ordering() {
        let vocab = build_vocab(&["a a a b"], 5).unwrap();
        let m = NgramModel::train(&["a a a b"], 1, &[0.75], vocab).unwrap();
        assert!(m.prob(&[], "a") > m.prob(&[], "b"));
        assert_eq!(m.score_tokens(&["a"]).unwrap().len(), 2);
    }

    #[test]
    fn normalizes() {
        let lines = [
            "the cat sat",
            "the dog sat down",
            "a cat ran",
            "the cat ran down the road",
        ];
        let vocab = build_vocab(&lines, 6).unwrap();
        let m = NgramModel::train(&lines, 3, &[0.5, 0.7, 0.9], vocab).unwrap();
        let v = m.vocab().size() as u32;
        for h in [
            vec![],
            vec![0],
            vec![v, v],
            vec![1, 2],
            vec![5, 5],
            vec![v, 0],
        ] {
            let s: f64 = (0..v).map(|w| m.prob_ids(&h, w)).sum();
            assert!((s - 1.0).abs() < 1e-12, "{h:?}: {s}");
        }
    }

    #[test]
    fn training_errors() {
        let vocab = build_vocab(&["a"], 1).unwrap();
        assert!(matches!(
            NgramModel::train(&["a"], 2, &[1.0], vocab.clone()),
            Err(LmError::Discount(_))
        ));
        assert!(matches!(
            NgramModel::train(&["a"], 2, &[0.0], vocab.clone()),
            Err(LmError::Discount(_))
        ));
        assert!(matches!(
            NgramModel::train(&["", " "], 2, &[0.5], vocab.clone()),
            Err(LmError::EmptyCorpus)
        ));
        assert!(matches!(
            NgramModel::train(&["a"], 6, &[0.5], vocab.clone()),
            Err(LmError::Order(6))
        ));
        assert!(NgramModel::train(&["a"], 3, &[0.5, 0.5], vocab.clone()).is_err());
        let m = NgramModel::train(&["a"], 2, &[0.5], vocab).unwrap();
        assert!(matches!(m.score_tokens(&[]), Err(LmError::EmptySentence)));
    }

    #[test]
    fn dump_round_trip_is_bit_exact() {
        let lines = ["x y z", "y z x y", "z z z", "q x"];
        let vocab = build_vocab(&lines, 3).unwrap();
        let m = NgramModel::train(&lines, 3, &[0.3, 0.61, 0.77], vocab).unwrap();
        let mut buf = Vec::new();
        m.write(&mut buf).unwrap();
        let back = NgramModel::read(buf.as_slice()).unwrap();
        assert_eq!(back, m);
        for probe in [&["x", "y"][..], &["q", "q", "z"], &["unseen"]] {
            let a = m.score_tokens(probe).unwrap();
            let b = back.score_tokens(probe).unwrap();
            assert_eq!(
                a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                b.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
            );
        }
        let mut again = Vec::new();
        back.write(&mut again).unwrap();
        assert_eq!(again, buf);
    }
}
