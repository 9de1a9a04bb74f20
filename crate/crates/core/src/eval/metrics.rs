use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{stats::mean, EvalError, MinimalPair};
use crate::filters::Registry;
use crate::lm::SentenceScorer;

pub const FULL: &str = "full";

/// (M, F, seed): architecture label, training corpus and seed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModelKey {
    pub architecture: String,
    pub corpus: String,
    pub seed: u64,
}

impl ModelKey {
    /// `corpus` must be `full` or a filter in `registry`.
    pub fn new(
        architecture: &str,
        corpus: &str,
        seed: u64,
        registry: &Registry,
    ) -> Result<Self, EvalError> {
        if architecture.is_empty() {
            return Err(EvalError::InvalidKey("empty architecture".into()));
        }
        if corpus != FULL && registry.get(corpus).is_err() {
            return Err(EvalError::InvalidKey(format!(
                "corpus {corpus:?} is neither \"full\" nor a registered filter"
            )));
        }
        Ok(ModelKey {
            architecture: architecture.to_string(),
            corpus: corpus.to_string(),
            seed,
        })
    }

    pub fn is_full(&self) -> bool {
        self.corpus == FULL
    }
}

/// TSE outcome of one model on one benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub model: ModelKey,
    pub benchmark: String,
    /// Fraction of pairs with log P(s⁺) > log P(s⁻), in [0, 1].
    pub accuracy: f64,
    pub mean_p_delta: f64,
    pub pair_ids: Vec<String>,
    pub p_deltas: Vec<f64>,
    /// Log-probability and token count (end markers included) pooled over
    /// both sentences of every pair, for sentence-level perplexity.
    pub logprob_sum: f64,
    pub token_count: u64,
}

/// PΔ = log P(s⁺) − log P(s⁻).
pub fn p_delta(plus: f64, minus: f64) -> Result<f64, EvalError> {
    if !plus.is_finite() || !minus.is_finite() {
        return Err(EvalError::NonFinite);
    }
    Ok(plus - minus)
}

/// Share of strictly positive deltas; ties count as failures.
pub fn accuracy_from_deltas(deltas: &[f64]) -> Result<f64, EvalError> {
    if deltas.is_empty() {
        return Err(EvalError::EmptyPairs);
    }
    Ok(deltas.iter().filter(|d| **d > 0.0).count() as f64 / deltas.len() as f64)
}

/// accΔ in percentage points: `acc_filtered − mean(full_accs)`.
pub fn acc_delta(acc_filtered: f64, full_accs_over_seeds: &[f64]) -> Result<f64, EvalError> {
    if full_accs_over_seeds.is_empty() {
        return Err(EvalError::EmptySeeds);
    }
    Ok(acc_filtered - mean(full_accs_over_seeds))
}

/// Scores every pair (in parallel) and computes accuracy and PΔ. All pairs
/// must belong to one benchmark.
pub fn tse_accuracy(
    scorer: &dyn SentenceScorer,
    pairs: &[MinimalPair],
    model: &ModelKey,
) -> Result<BenchmarkResult, EvalError> {
    let first = pairs.first().ok_or(EvalError::EmptyPairs)?;
    if let Some(p) = pairs.iter().find(|p| p.benchmark != first.benchmark) {
        return Err(EvalError::MixedBenchmarks(
            first.benchmark.clone(),
            p.benchmark.clone(),
        ));
    }
    let scored: Vec<(f64, f64, u64)> = pairs
        .par_iter()
        .map(|p| {
            let good = scorer.score(&p.good_id(), &p.good_tokens())?;
            let bad = scorer.score(&p.bad_id(), &p.bad_tokens())?;
            Ok((
                p_delta(good.total_logprob, bad.total_logprob)?,
                good.total_logprob + bad.total_logprob,
                (good.token_count + bad.token_count) as u64,
            ))
        })
        .collect::<Result<_, EvalError>>()?;
    let p_deltas: Vec<f64> = scored.iter().map(|s| s.0).collect();
    Ok(BenchmarkResult {
        model: model.clone(),
        benchmark: first.benchmark.clone(),
        accuracy: accuracy_from_deltas(&p_deltas)?,
        mean_p_delta: mean(&p_deltas),
        pair_ids: pairs.iter().map(|p| p.pair_id.clone()).collect(),
        logprob_sum: scored.iter().map(|s| s.1).sum(),
        token_count: scored.iter().map(|s| s.2).sum(),
        p_deltas,
    })
}

/// Runs [`tse_accuracy`] per benchmark present in `pairs` (benchmark order).
/// A benchmark whose sentences cannot all be scored yields its error in
/// place, so callers can report the missing cell.
pub fn evaluate(
    scorer: &dyn SentenceScorer,
    pairs: &[MinimalPair],
    model: &ModelKey,
) -> Vec<(String, Result<BenchmarkResult, EvalError>)> {
    let mut by_bench: BTreeMap<&str, Vec<MinimalPair>> = BTreeMap::new();
    for p in pairs {
        by_bench.entry(&p.benchmark).or_default().push(p.clone());
    }
    by_bench
        .into_iter()
        .map(|(b, ps)| (b.to_string(), tse_accuracy(scorer, &ps, model)))
        .collect()
}

pub fn write_results<W: Write>(mut w: W, results: &[BenchmarkResult]) -> Result<(), EvalError> {
    for r in results {
        serde_json::to_writer(&mut w, r).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results<R: BufRead>(r: R) -> Result<Vec<BenchmarkResult>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: BenchmarkResult = serde_json::from_str(&line).map_err(|e| EvalError::Record {
            line: i + 1,
            message: e.to_string(),
        })?;
        if rec.p_deltas.len() != rec.pair_ids.len() || rec.p_deltas.is_empty() {
            return Err(EvalError::Record {
                line: i + 1,
                message: "p_deltas and pair_ids must be non-empty and of equal length".into(),
            });
        }
        out.push(rec);
    }
    Ok(out)
}
