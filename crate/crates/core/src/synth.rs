//! Deterministic synthetic annotated corpora and benchmarks.
//!
//! [`agreement_corpus`] is a toy language with subject-verb number agreement
//! in which subjects are sometimes modified by a prepositional phrase. The
//! preposition of that construction carries the subject's number (`of` for
//! singular, `ofs` for plural), so a trigram model can learn agreement across
//! the attractor noun only if it has seen the construction. Its annotation
//! matches the `agr-pp-mod` pattern exactly when the construction is present.
//!
//! [`random_corpus`] draws arbitrary small trees over a vocabulary containing
//! the lexical triggers of every built-in filter, for property tests.

use crate::conllu::{Features, Sentence, Token};
use crate::corpus::rng::SampleRng;
use crate::eval::MinimalPair;

/// Targeted benchmark of the toy experiment (F(B) = `agr-pp-mod`).
pub const PP_BENCHMARK: &str = "distractor_agreement_relational_noun";
/// Control benchmark: plain subject-verb agreement.
pub const SIMPLE_BENCHMARK: &str = "regular_plural_subject_verb_agreement_1";

const NOUNS: [(&str, &str); 12] = [
    ("dog", "dogs"),
    ("cat", "cats"),
    ("bird", "birds"),
    ("fox", "foxes"),
    ("horse", "horses"),
    ("girl", "girls"),
    ("boy", "boys"),
    ("tree", "trees"),
    ("key", "keys"),
    ("book", "books"),
    ("lamp", "lamps"),
    ("car", "cars"),
];
const INTRANSITIVE: [(&str, &str); 6] = [
    ("runs", "run"),
    ("sleeps", "sleep"),
    ("sings", "sing"),
    ("falls", "fall"),
    ("waits", "wait"),
    ("smiles", "smile"),
];
const TRANSITIVE: [(&str, &str); 4] = [
    ("sees", "see"),
    ("likes", "like"),
    ("finds", "find"),
    ("takes", "take"),
];
const LOCATIVE: [&str; 3] = ["near", "under", "behind"];

fn pick<'a, T>(rng: &mut SampleRng, xs: &'a [T]) -> &'a T {
    &xs[rng.below(xs.len() as u64) as usize]
}

fn num(plural: bool) -> usize {
    plural as usize
}

fn form(pair: &Lex, plural: bool) -> &'static str {
    if plural {
        pair.1
    } else {
        pair.0
    }
}

fn token(
    id: u32,
    form: &str,
    lemma: &str,
    upos: &str,
    feats: &str,
    head: u32,
    deprel: &str,
) -> Token {
    Token {
        id,
        form: form.into(),
        lemma: lemma.into(),
        upos: upos.into(),
        xpos: "_".into(),
        feats: Features::parse(feats).expect("valid features"),
        head,
        deprel: deprel.into(),
    }
}

fn noun(id: u32, n: &Lex, plural: bool, head: u32, deprel: &str) -> Token {
    let feats = ["Number=Sing", "Number=Plur"][num(plural)];
    token(id, form(n, plural), n.0, "NOUN", feats, head, deprel)
}

fn verb(id: u32, v: &Lex, plural: bool, head: u32, deprel: &str) -> Token {
    token(id, form(v, plural), v.1, "VERB", "_", head, deprel)
}

fn punct(id: u32, head: u32) -> Token {
    token(id, ".", ".", "PUNCT", "_", head, "punct")
}

fn pp_marker(plural_subject: bool) -> &'static str {
    ["of", "ofs"][num(plural_subject)]
}

/// `N1 of|ofs N2 V .` with V agreeing with N1.
type Lex = (&'static str, &'static str);

fn pp_subject_sentence(
    n1: &Lex,
    p1: bool,
    n2: &Lex,
    p2: bool,
    v: &Lex,
    verb_plural: bool,
) -> Vec<Token> {
    vec![
        noun(1, n1, p1, 4, "nsubj"),
        token(2, pp_marker(p1), "of", "ADP", "_", 3, "case"),
        noun(3, n2, p2, 1, "nmod"),
        verb(4, v, verb_plural, 0, "root"),
        punct(5, 4),
    ]
}

fn simple_sentence(n: &Lex, p: bool, v: &Lex, verb_plural: bool) -> Vec<Token> {
    vec![
        noun(1, n, p, 2, "nsubj"),
        verb(2, v, verb_plural, 0, "root"),
        punct(3, 2),
    ]
}

/// `n` sentences; about a fifth carry the PP-modified subject construction.
pub fn agreement_corpus(n: usize, seed: u64) -> Vec<Sentence> {
    let mut rng = SampleRng::from_seed(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let p1 = rng.below(2) == 1;
        let n1 = pick(&mut rng, &NOUNS);
        let tokens = match rng.below(20) {
            0..=5 => simple_sentence(n1, p1, pick(&mut rng, &INTRANSITIVE), p1),
            6..=10 => {
                let v = pick(&mut rng, &TRANSITIVE);
                let (n2, p2) = (pick(&mut rng, &NOUNS), rng.below(2) == 1);
                vec![
                    noun(1, n1, p1, 2, "nsubj"),
                    verb(2, v, p1, 0, "root"),
                    noun(3, n2, p2, 2, "obj"),
                    punct(4, 2),
                ]
            }
            11..=15 => {
                let v = pick(&mut rng, &INTRANSITIVE);
                let prep = *pick(&mut rng, &LOCATIVE);
                let (n2, p2) = (pick(&mut rng, &NOUNS), rng.below(2) == 1);
                vec![
                    noun(1, n1, p1, 2, "nsubj"),
                    verb(2, v, p1, 0, "root"),
                    token(3, prep, prep, "ADP", "_", 4, "case"),
                    noun(4, n2, p2, 2, "obl"),
                    punct(5, 2),
                ]
            }
            _ => {
                let (n2, p2) = (pick(&mut rng, &NOUNS), rng.below(2) == 1);
                pp_subject_sentence(n1, p1, n2, p2, pick(&mut rng, &INTRANSITIVE), p1)
            }
        };
        let id = format!("sent_id = synth-{i:05}");
        out.push(Sentence::from_tokens(tokens, &[&id]).expect("generated trees are valid"));
    }
    out
}

fn text(tokens: &[Token]) -> String {
    tokens
        .iter()
        .map(|t| t.form.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Pairs for [`PP_BENCHMARK`]: the attractor noun always has the other
/// number, and the bad sentence's verb agrees with it.
pub fn pp_benchmark(n_pairs: usize, seed: u64) -> Vec<MinimalPair> {
    let mut rng = SampleRng::from_seed(seed);
    (0..n_pairs)
        .map(|i| {
            let p1 = rng.below(2) == 1;
            let n1 = pick(&mut rng, &NOUNS);
            let n2 = pick(&mut rng, &NOUNS);
            let v = pick(&mut rng, &INTRANSITIVE);
            MinimalPair {
                pair_id: format!("{PP_BENCHMARK}-{i:04}"),
                benchmark: PP_BENCHMARK.into(),
                good: text(&pp_subject_sentence(n1, p1, n2, !p1, v, p1)),
                bad: text(&pp_subject_sentence(n1, p1, n2, !p1, v, !p1)),
            }
        })
        .collect()
}

/// Pairs for [`SIMPLE_BENCHMARK`]: `N V .` with and without agreement.
pub fn simple_benchmark(n_pairs: usize, seed: u64) -> Vec<MinimalPair> {
    let mut rng = SampleRng::from_seed(seed);
    (0..n_pairs)
        .map(|i| {
            let p = rng.below(2) == 1;
            let n = pick(&mut rng, &NOUNS);
            let v = pick(&mut rng, &INTRANSITIVE);
            MinimalPair {
                pair_id: format!("{SIMPLE_BENCHMARK}-{i:04}"),
                benchmark: SIMPLE_BENCHMARK.into(),
                good: text(&simple_sentence(n, p, v, p)),
                bad: text(&simple_sentence(n, p, v, !p)),
            }
        })
        .collect()
}

const RANDOM_FORMS: [&str; 40] = [
    "the",
    "a",
    "dog",
    "dogs",
    "goose",
    "women",
    "sketch",
    "lights",
    "only",
    "ever",
    "any",
    "at",
    "all",
    "not",
    "n't",
    "never",
    "there",
    "many",
    "some",
    "herself",
    "himself",
    "themselves",
    "she",
    "him",
    "it",
    "that",
    "those",
    "this",
    "horses",
    "store",
    "least",
    "most",
    "more",
    "than",
    "5",
    "insulted",
    "smiled",
    "lucky",
    "?",
    ".",
];
const RANDOM_UPOS: [&str; 11] = [
    "NOUN", "PROPN", "PRON", "VERB", "AUX", "ADJ", "ADP", "DET", "NUM", "ADV", "PUNCT",
];
const RANDOM_DEPRELS: [&str; 20] = [
    "nsubj",
    "nsubj:pass",
    "obj",
    "iobj",
    "obl",
    "nmod",
    "case",
    "det",
    "amod",
    "acl",
    "acl:relcl",
    "advcl",
    "ccomp",
    "xcomp",
    "expl",
    "aux",
    "aux:pass",
    "advmod",
    "nummod",
    "punct",
];

/// `n` random trees of 1 to 12 tokens.
pub fn random_corpus(n: usize, seed: u64) -> Vec<Sentence> {
    let mut rng = SampleRng::from_seed(seed);
    (0..n)
        .map(|i| {
            let len = 1 + rng.below(12) as usize;
            // Attach tokens, in a random order, to a token placed earlier.
            let mut order: Vec<usize> = (0..len).collect();
            for k in (1..len).rev() {
                order.swap(k, rng.below(k as u64 + 1) as usize);
            }
            let mut heads = vec![0u32; len];
            for k in 1..len {
                heads[order[k]] = order[rng.below(k as u64) as usize] as u32 + 1;
            }
            let tokens = (0..len)
                .map(|j| {
                    let f = *pick(&mut rng, &RANDOM_FORMS);
                    let upos = *pick(&mut rng, &RANDOM_UPOS);
                    let rel = *pick(&mut rng, &RANDOM_DEPRELS);
                    let feats = if f == "5" { "NumType=Card" } else { "_" };
                    let rel = if heads[j] == 0 { "root" } else { rel };
                    token(j as u32 + 1, f, f, upos, feats, heads[j], rel)
                })
                .collect();
            let id = format!("sent_id = random-{i:05}");
            Sentence::from_tokens(tokens, &[&id]).expect("generated trees are valid")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::Registry;

    #[test]
    fn construction_matches_filter_exactly() {
        let reg = Registry::builtin();
        let f = reg.get("agr-pp-mod").unwrap();
        let corpus = agreement_corpus(500, 3);
        let mut hits = 0;
        for s in &corpus {
            let has_pp_subject = s.tokens().iter().any(|t| t.form == "of" || t.form == "ofs");
            assert_eq!(f.discards(s), has_pp_subject, "{}", s.text());
            hits += has_pp_subject as usize;
        }
        assert!(hits > 50 && hits < 150, "{hits}");
    }

    #[test]
    fn deterministic() {
        assert_eq!(agreement_corpus(50, 9), agreement_corpus(50, 9));
        assert_ne!(agreement_corpus(50, 9), agreement_corpus(50, 10));
        assert_eq!(random_corpus(50, 1), random_corpus(50, 1));
        assert_eq!(pp_benchmark(20, 1), pp_benchmark(20, 1));
    }

    #[test]
    fn benchmark_pairs_differ_only_in_the_verb() {
        for p in pp_benchmark(50, 2).iter().chain(&simple_benchmark(50, 2)) {
            let (g, b) = (p.good_tokens(), p.bad_tokens());
            assert_eq!(g.len(), b.len());
            assert_eq!(g.iter().zip(&b).filter(|(x, y)| x != y).count(), 1);
        }
    }
}
