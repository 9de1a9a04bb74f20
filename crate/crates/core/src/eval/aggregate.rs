//! Aggregation of per-(model, benchmark) results into the report tables:
//! the seed-averaged accΔ matrix with F = F(B) cells flagged, the mean accΔ
//! over flagged cells, full-vs-filtered PΔ summaries, and sentence-level
//! perplexities. Everything is keyed by ordered maps, so the output does not
//! depend on the order of the input records.

use std::collections::{BTreeMap, BTreeSet};

use super::metrics::{acc_delta, BenchmarkResult, ModelKey, FULL};
use super::stats::{mean, paired_t, pearson, TTest};
use super::EvalError;
use crate::filters::Registry;

/// One (M, F, B) cell of the accΔ matrix. Accuracies are percentages.
#[derive(Debug, Clone, PartialEq)]
pub struct AccDeltaCell {
    pub architecture: String,
    pub corpus: String,
    pub benchmark: String,
    /// F = F(B).
    pub targeted: bool,
    pub full_mean: f64,
    /// (seed, filtered accuracy, delta) for each filtered-model seed.
    pub per_seed: Vec<(u64, f64, f64)>,
    pub mean_delta: f64,
}

/// Full-vs-filtered PΔ comparison for one benchmark and its F(B).
#[derive(Debug, Clone, PartialEq)]
pub struct PDeltaRow {
    pub architecture: String,
    pub benchmark: String,
    pub filter: String,
    pub pairs: usize,
    pub full_mean: f64,
    pub filtered_mean: f64,
    /// filtered − full.
    pub difference: f64,
    /// Correlation of seed-averaged per-pair PΔ; `None` when undefined.
    pub pearson: Option<f64>,
    pub increased: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerplexityRow {
    pub model: ModelKey,
    pub perplexity: f64,
    pub tokens: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchitectureSummary {
    pub architecture: String,
    /// Mean of `mean_delta` over targeted cells; `None` without any.
    pub mean_targeted_acc_delta: Option<f64>,
    pub targeted_cells: usize,
    /// Mean full-model accuracy over benchmarks (seed-averaged), percent.
    pub full_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct MissingCell {
    pub architecture: String,
    pub corpus: String,
    pub seed: Option<u64>,
    pub benchmark: String,
}

/// Paired t-test of sentence perplexities between two architectures, over
/// models matched by (corpus, seed).
#[derive(Debug, Clone, PartialEq)]
pub struct PerplexityTest {
    pub first: String,
    pub second: String,
    pub matched: usize,
    pub test: Option<TTest>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub results: Vec<BenchmarkResult>,
    pub benchmarks: Vec<String>,
    pub acc_deltas: Vec<AccDeltaCell>,
    pub p_deltas: Vec<PDeltaRow>,
    pub perplexities: Vec<PerplexityRow>,
    pub perplexity_tests: Vec<PerplexityTest>,
    pub summaries: Vec<ArchitectureSummary>,
    pub missing: Vec<MissingCell>,
}

type CellKey = (String, String, String); // (architecture, corpus, benchmark)

pub fn aggregate(results: &[BenchmarkResult], registry: &Registry) -> Result<Report, EvalError> {
    // (arch, corpus, benchmark) -> seed -> result
    let mut cells: BTreeMap<CellKey, BTreeMap<u64, &BenchmarkResult>> = BTreeMap::new();
    for r in results {
        let m = &r.model;
        if m.corpus != FULL && registry.get(&m.corpus).is_err() {
            return Err(EvalError::InvalidKey(format!(
                "unregistered corpus {:?}",
                m.corpus
            )));
        }
        let slot = cells
            .entry((
                m.architecture.clone(),
                m.corpus.clone(),
                r.benchmark.clone(),
            ))
            .or_default();
        if slot.insert(m.seed, r).is_some() {
            return Err(EvalError::DuplicateId(format!(
                "{}/{}/seed {}/{}",
                m.architecture, m.corpus, m.seed, r.benchmark
            )));
        }
    }
    let benchmarks: BTreeSet<String> = results.iter().map(|r| r.benchmark.clone()).collect();
    let mut corpora: BTreeMap<String, BTreeMap<String, BTreeSet<u64>>> = BTreeMap::new();
    for r in results {
        corpora
            .entry(r.model.architecture.clone())
            .or_default()
            .entry(r.model.corpus.clone())
            .or_default()
            .insert(r.model.seed);
    }

    let mut report = Report {
        benchmarks: benchmarks.iter().cloned().collect(),
        ..Report::default()
    };
    let mut sorted: Vec<BenchmarkResult> = results.to_vec();
    sorted.sort_by(|a, b| (&a.model, &a.benchmark).cmp(&(&b.model, &b.benchmark)));
    report.results = sorted;

    // Missing cells: every architecture needs every benchmark under every
    // corpus (and seed) it was run with, plus the full corpus.
    for (arch, by_corpus) in &corpora {
        if !by_corpus.contains_key(FULL) {
            for b in &benchmarks {
                report.missing.push(MissingCell {
                    architecture: arch.clone(),
                    corpus: FULL.into(),
                    seed: None,
                    benchmark: b.clone(),
                });
            }
        }
        for (corpus, seeds) in by_corpus {
            for b in &benchmarks {
                let have = cells.get(&(arch.clone(), corpus.clone(), b.clone()));
                for &seed in seeds {
                    if !have.is_some_and(|h| h.contains_key(&seed)) {
                        report.missing.push(MissingCell {
                            architecture: arch.clone(),
                            corpus: corpus.clone(),
                            seed: Some(seed),
                            benchmark: b.clone(),
                        });
                    }
                }
            }
        }
    }
    report.missing.sort();

    let pct = |r: &BenchmarkResult| 100.0 * r.accuracy;
    for ((arch, corpus, bench), seeds) in &cells {
        if corpus == FULL {
            continue;
        }
        let Some(full) = cells.get(&(arch.clone(), FULL.to_string(), bench.clone())) else {
            continue;
        };
        let full_accs: Vec<f64> = full.values().map(|r| pct(r)).collect();
        let per_seed = seeds
            .iter()
            .map(|(&s, r)| Ok((s, pct(r), acc_delta(pct(r), &full_accs)?)))
            .collect::<Result<Vec<_>, EvalError>>()?;
        let deltas: Vec<f64> = per_seed.iter().map(|x| x.2).collect();
        report.acc_deltas.push(AccDeltaCell {
            architecture: arch.clone(),
            corpus: corpus.clone(),
            benchmark: bench.clone(),
            targeted: registry.targeting(bench).is_some_and(|f| &f.name == corpus),
            full_mean: mean(&full_accs),
            per_seed,
            mean_delta: mean(&deltas),
        });
    }

    // PΔ: seed-averaged per-pair deltas, full vs F(B).
    for ((arch, _, bench), full) in cells.iter().filter(|((_, c, _), _)| c == FULL) {
        let Some(filter) = registry.targeting(bench) else {
            continue;
        };
        let Some(filtered) = cells.get(&(arch.clone(), filter.name.clone(), bench.clone())) else {
            continue;
        };
        let full_pp = per_pair_means(full);
        let filt_pp = per_pair_means(filtered);
        let common: Vec<&String> = full_pp
            .keys()
            .filter(|k| filt_pp.contains_key(*k))
            .collect();
        if common.is_empty() {
            continue;
        }
        let xs: Vec<f64> = common.iter().map(|k| full_pp[*k]).collect();
        let ys: Vec<f64> = common.iter().map(|k| filt_pp[*k]).collect();
        let (fm, gm) = (mean(&xs), mean(&ys));
        report.p_deltas.push(PDeltaRow {
            architecture: arch.clone(),
            benchmark: bench.clone(),
            filter: filter.name.clone(),
            pairs: common.len(),
            full_mean: fm,
            filtered_mean: gm,
            difference: gm - fm,
            pearson: pearson(&xs, &ys).ok(),
            increased: gm > fm,
        });
    }

    // Sentence perplexity per model, pooling token counts before exponentiating.
    let mut by_model: BTreeMap<&ModelKey, Vec<&BenchmarkResult>> = BTreeMap::new();
    for r in &report.results {
        by_model.entry(&r.model).or_default().push(r);
    }
    for (model, rs) in by_model {
        let lp: f64 = rs.iter().map(|r| r.logprob_sum).sum();
        let tokens: u64 = rs.iter().map(|r| r.token_count).sum();
        if tokens > 0 {
            report.perplexities.push(PerplexityRow {
                model: model.clone(),
                perplexity: (-lp / tokens as f64).exp(),
                tokens,
            });
        }
    }
    let archs: Vec<&String> = corpora.keys().collect();
    for (i, a) in archs.iter().enumerate() {
        for b in &archs[i + 1..] {
            let ppl = |arch: &str| -> BTreeMap<(String, u64), f64> {
                report
                    .perplexities
                    .iter()
                    .filter(|p| p.model.architecture == arch)
                    .map(|p| ((p.model.corpus.clone(), p.model.seed), p.perplexity))
                    .collect()
            };
            let (pa, pb) = (ppl(a), ppl(b));
            let keys: Vec<_> = pa.keys().filter(|k| pb.contains_key(*k)).cloned().collect();
            let xs: Vec<f64> = keys.iter().map(|k| pa[k]).collect();
            let ys: Vec<f64> = keys.iter().map(|k| pb[k]).collect();
            report.perplexity_tests.push(PerplexityTest {
                first: a.to_string(),
                second: b.to_string(),
                matched: keys.len(),
                test: paired_t(&xs, &ys).ok(),
            });
        }
    }

    for arch in corpora.keys() {
        let targeted: Vec<f64> = report
            .acc_deltas
            .iter()
            .filter(|c| &c.architecture == arch && c.targeted)
            .map(|c| c.mean_delta)
            .collect();
        let full_accs: Vec<f64> = cells
            .iter()
            .filter(|((a, c, _), _)| a == arch && c == FULL)
            .map(|(_, seeds)| mean(&seeds.values().map(|r| pct(r)).collect::<Vec<_>>()))
            .collect();
        report.summaries.push(ArchitectureSummary {
            architecture: arch.clone(),
            mean_targeted_acc_delta: (!targeted.is_empty()).then(|| mean(&targeted)),
            targeted_cells: targeted.len(),
            full_accuracy: (!full_accs.is_empty()).then(|| mean(&full_accs)),
        });
    }
    Ok(report)
}

fn per_pair_means(seeds: &BTreeMap<u64, &BenchmarkResult>) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in seeds.values() {
        for (id, d) in r.pair_ids.iter().zip(&r.p_deltas) {
            let e = acc.entry(id.clone()).or_default();
            e.0 += d;
            e.1 += 1;
        }
    }
    acc.into_iter()
        .map(|(k, (s, n))| (k, s / n as f64))
        .collect()
}
