//! The toy experiment: a synthetic corpus with one agreement construction,
//! the filter that removes it, trigram models on full and filtered samples
//! over several seeds, and the targeted benchmark scored and reported.
//!
//! Layout under the run directory:
//!
//! ```text
//! data/corpus.conllu, data/pairs.jsonl      synthetic inputs
//! filtered/                                 filter stage outputs
//! vocab.txt                                 shared vocabulary (full corpus)
//! sampled/<corpus>.s<seed>.txt(.manifest)   downsampled training sets
//! models/<corpus>.s<seed>.model             trigram models
//! eval/results.jsonl, eval/results.missing.csv
//! report/                                   report tables
//! ```

use std::path::Path;

use super::stages::{
    cmd_downsample, cmd_eval, cmd_filter, cmd_report, cmd_train, cmd_vocab, StageReport,
};
use super::{create, write_meta, PipelineError, RunConfig};
use crate::eval::{self, FULL};
use crate::synth;

pub const ARCHITECTURE: &str = "kn3";
pub const FILTER: &str = "agr-pp-mod";

#[derive(Debug, Clone)]
pub struct ToyOptions {
    pub sentences: u64,
    pub pairs: u64,
    pub control_pairs: u64,
    pub data_seed: u64,
    pub target_lines: u64,
    pub seeds: Vec<u64>,
    pub order: u64,
}

impl Default for ToyOptions {
    fn default() -> Self {
        ToyOptions {
            sentences: 5000,
            pairs: 200,
            control_pairs: 100,
            data_seed: 7,
            target_lines: 3000,
            seeds: vec![1, 2, 3],
            order: 3,
        }
    }
}

/// Writes `out_dir/corpus.conllu` (`sentences` sentences) and
/// `out_dir/pairs.jsonl` (`pair_count` targeted pairs plus half as many
/// control pairs), all drawn from `seed`.
pub fn cmd_synth(cfg: &RunConfig) -> Result<StageReport, PipelineError> {
    let out_dir = cfg.path("out_dir")?;
    let seed = cfg.require_u64("seed")?;
    let n = cfg.u64("sentences").unwrap_or(5000) as usize;
    let k = cfg.u64("pair_count").unwrap_or(200) as usize;

    let corpus_path = out_dir.join("corpus.conllu");
    let mut w = create(&corpus_path)?;
    for s in synth::agreement_corpus(n, seed) {
        s.write_to(&mut w)
            .map_err(PipelineError::io(&corpus_path))?;
    }
    std::io::Write::flush(&mut w).map_err(PipelineError::io(&corpus_path))?;

    // Benchmarks use seeds derived from, but distinct from, the corpus seed.
    let mut pairs = synth::pp_benchmark(k, seed.wrapping_add(1));
    pairs.extend(synth::simple_benchmark(k / 2, seed.wrapping_add(2)));
    let pairs_path = out_dir.join("pairs.jsonl");
    let mut w = create(&pairs_path)?;
    eval::write_pairs(&mut w, &pairs).map_err(|e| PipelineError::data(&pairs_path, e))?;
    std::io::Write::flush(&mut w).map_err(PipelineError::io(&pairs_path))?;

    for p in [&corpus_path, &pairs_path] {
        write_meta(p, "synth", cfg, Some(seed), &[])?;
    }
    Ok(StageReport {
        notes: vec![format!("{n} sentences, {} pairs", pairs.len())],
        outputs: vec![corpus_path, pairs_path],
    })
}

fn cfg(pairs: &[(&str, String)]) -> Result<RunConfig, PipelineError> {
    let mut c = RunConfig::new();
    for (k, v) in pairs {
        c.set(k, v)?;
    }
    Ok(c)
}

fn p(path: &Path) -> String {
    path.display().to_string()
}

/// Runs every stage under `dir`; returns the concatenated stage reports.
pub fn run_toy(dir: &Path, o: &ToyOptions) -> Result<StageReport, PipelineError> {
    let mut all = StageReport::default();
    let mut take = |r: StageReport| {
        all.outputs.extend(r.outputs);
        all.notes.extend(r.notes);
    };
    let data = dir.join("data");
    take(cmd_synth(&cfg(&[
        ("out_dir", p(&data)),
        ("seed", o.data_seed.to_string()),
        ("sentences", o.sentences.to_string()),
        ("pair_count", o.pairs.to_string()),
    ])?)?);
    let filtered = dir.join("filtered");
    take(cmd_filter(&cfg(&[
        ("conllu", p(&data.join("corpus.conllu"))),
        ("out_dir", p(&filtered)),
        ("filters", FILTER.into()),
    ])?)?);
    let vocab = dir.join("vocab.txt");
    take(cmd_vocab(&cfg(&[
        ("input", p(&filtered.join("full.txt"))),
        ("output", p(&vocab)),
    ])?)?);

    let mut runs = Vec::new();
    for (corpus, text) in [
        (FULL, "full.txt".to_string()),
        (FILTER, format!("{FILTER}.kept.txt")),
    ] {
        for &seed in &o.seeds {
            let sample = dir.join("sampled").join(format!("{corpus}.s{seed}.txt"));
            take(cmd_downsample(&cfg(&[
                ("input", p(&filtered.join(&text))),
                ("output", p(&sample)),
                ("target_lines", o.target_lines.to_string()),
                ("seed", seed.to_string()),
            ])?)?);
            let model = dir.join("models").join(format!("{corpus}.s{seed}.model"));
            take(cmd_train(&cfg(&[
                ("input", p(&sample)),
                ("output", p(&model)),
                ("vocab", p(&vocab)),
                ("order", o.order.to_string()),
            ])?)?);
            runs.push(format!("{ARCHITECTURE}:{corpus}:{seed}={}", p(&model)));
        }
    }

    let results = dir.join("eval").join("results.jsonl");
    take(cmd_eval(&cfg(&[
        ("pairs", p(&data.join("pairs.jsonl"))),
        ("runs", runs.join(",")),
        ("output", p(&results)),
    ])?)?);
    take(cmd_report(&cfg(&[
        ("results", p(&results)),
        ("out_dir", p(&dir.join("report"))),
    ])?)?);
    Ok(all)
}
