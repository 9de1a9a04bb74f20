use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{create, open, with_suffix, write_file, write_meta, PipelineError, RunConfig};
use crate::conllu::{ParseMode, Reader, Sentence};
use crate::corpus::{self, build_vocab, corpus_stats, SampleManifest, Vocabulary};
use crate::eval::{self, report, BenchmarkResult, MinimalPair, ModelKey};
use crate::filters::{self, wordlists, FilterSpec, FilterStats, Registry};
use crate::lm::{self, NgramModel, SentenceScore, SentenceScorer, DEFAULT_DISCOUNT, MODEL_HEADER};

/// Files written by a stage (sidecars excluded) and notes for the user.
#[derive(Debug, Default)]
pub struct StageReport {
    pub outputs: Vec<PathBuf>,
    pub notes: Vec<String>,
}

type Result<T> = std::result::Result<T, PipelineError>;

const BATCH: usize = 4096;
const DEFAULT_ORDER: u64 = 3;
const DEFAULT_VOCAB_SIZE: u64 = 50_000;

fn registry(cfg: &RunConfig) -> Result<Registry> {
    let filter_dir = cfg.get("filter_dir").map(PathBuf::from);
    let wordlist_dir = cfg.get("wordlist_dir").map(PathBuf::from);
    for d in filter_dir.iter().chain(&wordlist_dir) {
        if !d.is_dir() {
            return Err(PipelineError::MissingInput(d.clone()));
        }
    }
    Registry::load(filter_dir.as_deref(), wordlist_dir.as_deref()).map_err(|e| match e {
        filters::FilterError::Io(source) => PipelineError::Io {
            path: filter_dir
                .clone()
                .or(wordlist_dir.clone())
                .unwrap_or_default(),
            source,
        },
        e => PipelineError::Data {
            path: filter_dir
                .clone()
                .or(wordlist_dir.clone())
                .unwrap_or_default(),
            message: e.to_string(),
        },
    })
}

fn output_or(cfg: &RunConfig, default_name: &str) -> Result<PathBuf> {
    match (cfg.get("output"), cfg.get("out_dir")) {
        (Some(o), _) => Ok(PathBuf::from(o)),
        (None, Some(d)) => Ok(Path::new(d).join(default_name)),
        (None, None) => Err(PipelineError::Usage(
            "missing required setting `output` (or `out_dir`)".into(),
        )),
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    open(path)?
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(PipelineError::io(path))
}

fn read_pair_files(cfg: &RunConfig) -> Result<Vec<MinimalPair>> {
    let mut pairs = Vec::new();
    let mut seen = BTreeSet::new();
    for path in cfg.paths("pairs")? {
        let ps = eval::read_pairs(open(&path)?).map_err(|e| PipelineError::data(&path, e))?;
        for p in ps {
            if !seen.insert(p.pair_id.clone()) {
                return Err(PipelineError::data(
                    &path,
                    format!("duplicate pair id {:?}", p.pair_id),
                ));
            }
            pairs.push(p);
        }
    }
    Ok(pairs)
}

/// Filter names selected by `filters` (`all` or a list), in registry order
/// for `all` and in the given order otherwise.
fn selected<'r>(cfg: &RunConfig, reg: &'r Registry) -> Result<Vec<&'r FilterSpec>> {
    let names = cfg.list("filters");
    if names.is_empty() {
        return Err(PipelineError::Usage(
            "no filters selected (use `all` or a list of names)".into(),
        ));
    }
    if names.len() == 1 && names[0] == "all" {
        return Ok(reg.specs().iter().collect());
    }
    let mut out: Vec<&FilterSpec> = Vec::new();
    for n in &names {
        let spec = reg.get(n).map_err(|_| {
            PipelineError::Usage(format!(
                "unknown filter {n:?}; registered: {}",
                reg.names().join(", ")
            ))
        })?;
        if out.iter().any(|s| s.name == spec.name) {
            return Err(PipelineError::Usage(format!("filter {n:?} selected twice")));
        }
        out.push(spec);
    }
    Ok(out)
}

struct FilterOutputs {
    kept: std::io::BufWriter<std::fs::File>,
    discarded: std::io::BufWriter<std::fs::File>,
    kept_txt: std::io::BufWriter<std::fs::File>,
    paths: [PathBuf; 3],
}

/// Streams the annotated corpus once, applying every selected filter.
///
/// Writes, under `out_dir`: `full.txt` (the whole corpus, one sentence per
/// line), per filter `<name>.kept.conllu`, `<name>.discarded.conllu` and
/// `<name>.kept.txt`, and `filter_stats.csv` with one row per filter.
pub fn cmd_filter(cfg: &RunConfig) -> Result<StageReport> {
    let input = cfg.path("conllu")?;
    let out_dir = cfg.path("out_dir")?;
    let reg = registry(cfg)?;
    let specs = selected(cfg, &reg)?;
    let source = open(&input)?;

    let full_path = out_dir.join("full.txt");
    let mut full = create(&full_path)?;
    let mut outs = Vec::with_capacity(specs.len());
    for s in &specs {
        let paths = ["kept.conllu", "discarded.conllu", "kept.txt"]
            .map(|x| out_dir.join(format!("{}.{x}", s.name)));
        outs.push(FilterOutputs {
            kept: create(&paths[0])?,
            discarded: create(&paths[1])?,
            kept_txt: create(&paths[2])?,
            paths,
        });
    }
    let mut stats = vec![FilterStats::default(); specs.len()];

    let mut flush = |batch: &mut Vec<Sentence>| -> Result<()> {
        let decisions = filters::decide_batch(batch, &specs);
        for (s, row) in batch.iter().zip(decisions) {
            let text = s.text();
            writeln!(full, "{text}").map_err(PipelineError::io(&full_path))?;
            for ((o, st), drop) in outs.iter_mut().zip(stats.iter_mut()).zip(row) {
                st.record(s, drop);
                let r = if drop {
                    s.write_to(&mut o.discarded)
                } else {
                    s.write_to(&mut o.kept)
                        .and_then(|_| writeln!(o.kept_txt, "{text}"))
                };
                r.map_err(PipelineError::io(&o.paths[0]))?;
            }
        }
        batch.clear();
        Ok(())
    };

    let mut reader = Reader::with_mode(source, cfg.mode());
    let mut batch = Vec::with_capacity(BATCH);
    for item in reader.by_ref() {
        batch.push(item.map_err(|e| PipelineError::data(&input, e))?);
        if batch.len() == BATCH {
            flush(&mut batch)?;
        }
    }
    flush(&mut batch)?;
    let skipped = reader.skipped().len();

    full.flush().map_err(PipelineError::io(&full_path))?;
    let mut report = StageReport::default();
    let extra = [("skipped_blocks", skipped.to_string())];
    write_meta(&full_path, "filter", cfg, None, &extra)?;
    report.outputs.push(full_path);
    for o in &mut outs {
        for (w, p) in [&mut o.kept, &mut o.discarded, &mut o.kept_txt]
            .into_iter()
            .zip(&o.paths)
        {
            w.flush().map_err(PipelineError::io(p))?;
            write_meta(p, "filter", cfg, None, &extra)?;
        }
        report.outputs.extend(o.paths.iter().cloned());
    }

    let stats_path = out_dir.join("filter_stats.csv");
    let rows: Vec<(&str, FilterStats)> = specs
        .iter()
        .map(|s| s.name.as_str())
        .zip(stats.iter().copied())
        .collect();
    let mut csv = Vec::new();
    filters::write_stats_csv(&mut csv, &rows).map_err(|e| PipelineError::data(&stats_path, e))?;
    write_file(&stats_path, csv)?;
    write_meta(&stats_path, "filter", cfg, None, &extra)?;
    report.outputs.push(stats_path);

    if cfg.mode() == ParseMode::Lenient {
        report
            .notes
            .push(format!("skipped {skipped} malformed sentence block(s)"));
    }
    for (s, st) in specs.iter().zip(&stats) {
        report.notes.push(format!(
            "{}: {} of {} sentences discarded ({:.2}%)",
            s.name,
            st.discarded_sentences,
            st.input_sentences,
            st.pct_sentences_filtered()
        ));
    }
    Ok(report)
}

/// Uniform sample of `target_lines` lines of `input` under `seed`, written to
/// `output` with its manifest at `output.manifest`; or, when `manifest` is
/// set, the replay of that manifest.
pub fn cmd_downsample(cfg: &RunConfig) -> Result<StageReport> {
    let input = cfg.path("input")?;
    let output = cfg.path("output")?;
    let manifest = match cfg.get("manifest") {
        Some(m) => {
            let m = PathBuf::from(m);
            let text = std::fs::read_to_string(&m).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => PipelineError::MissingInput(m.clone()),
                _ => PipelineError::io(&m)(e),
            })?;
            SampleManifest::parse(&text).map_err(|e| PipelineError::data(&m, e))?
        }
        None => {
            let target = cfg.require_u64("target_lines")?;
            let seed = cfg.require_u64("seed")?;
            corpus::plan(open(&input)?, target, seed).map_err(|e| PipelineError::data(&input, e))?
        }
    };
    let mut out = create(&output)?;
    corpus::replay(open(&input)?, &manifest, &mut out).map_err(|e| match e {
        corpus::CorpusError::Io(source) => PipelineError::Io {
            path: output.clone(),
            source,
        },
        e => PipelineError::data(&input, e),
    })?;
    drop(out);
    let manifest_path = with_suffix(&output, ".manifest");
    write_file(&manifest_path, manifest.to_text())?;
    for p in [&output, &manifest_path] {
        write_meta(p, "downsample", cfg, Some(manifest.seed), &[])?;
    }
    Ok(StageReport {
        notes: vec![format!(
            "kept {} of {} lines (seed {})",
            manifest.target_lines, manifest.source_lines, manifest.seed
        )],
        outputs: vec![output, manifest_path],
    })
}

/// `corpus,lines,tokens,types` for each file in `input`.
pub fn cmd_stats(cfg: &RunConfig) -> Result<StageReport> {
    let inputs = cfg.paths("input")?;
    let output = output_or(cfg, "corpus_stats.csv")?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let bad = |e: csv::Error| PipelineError::data(&output, e);
    w.write_record(["corpus", "lines", "tokens", "types"])
        .map_err(bad)?;
    for p in &inputs {
        let s = corpus_stats(open(p)?).map_err(|e| PipelineError::data(p, e))?;
        let name = p
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        w.write_record([
            name,
            s.lines.to_string(),
            s.tokens.to_string(),
            s.types.to_string(),
        ])
        .map_err(bad)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| PipelineError::data(&output, e))?;
    write_file(&output, bytes)?;
    write_meta(&output, "stats", cfg, None, &[])?;
    Ok(StageReport {
        outputs: vec![output],
        notes: Vec::new(),
    })
}

/// The `vocab_size` most frequent tokens of `input`.
pub fn cmd_vocab(cfg: &RunConfig) -> Result<StageReport> {
    let input = cfg.path("input")?;
    let output = cfg.path("output")?;
    let lines = read_lines(&input)?;
    let size = cfg.u64("vocab_size").unwrap_or(DEFAULT_VOCAB_SIZE) as usize;
    let vocab = build_vocab(&lines, size).map_err(|e| PipelineError::data(&input, e))?;
    let mut w = create(&output)?;
    vocab.write(&mut w).map_err(PipelineError::io(&output))?;
    drop(w);
    write_meta(&output, "vocab", cfg, None, &[])?;
    Ok(StageReport {
        notes: vec![format!(
            "{} items plus <unk> and <eos>",
            vocab.items().len()
        )],
        outputs: vec![output],
    })
}

/// Interpolated Kneser-Ney model of `order` over `input`. The vocabulary is
/// read from `vocab` when set, otherwise built from `input`.
pub fn cmd_train(cfg: &RunConfig) -> Result<StageReport> {
    let input = cfg.path("input")?;
    let output = cfg.path("output")?;
    let lines = read_lines(&input)?;
    let vocab = match cfg.get("vocab") {
        Some(v) => {
            let v = PathBuf::from(v);
            Vocabulary::read(open(&v)?).map_err(|e| PipelineError::data(&v, e))?
        }
        None => {
            let size = cfg.u64("vocab_size").unwrap_or(DEFAULT_VOCAB_SIZE) as usize;
            build_vocab(&lines, size).map_err(|e| PipelineError::data(&input, e))?
        }
    };
    let order = cfg.u64("order").unwrap_or(DEFAULT_ORDER) as usize;
    let discounts = cfg.discounts().unwrap_or_else(|| vec![DEFAULT_DISCOUNT]);
    let model = NgramModel::train(&lines, order, &discounts, vocab).map_err(|e| match e {
        lm::LmError::Order(_) | lm::LmError::Discount(_) | lm::LmError::DiscountCount { .. } => {
            PipelineError::Usage(e.to_string())
        }
        e => PipelineError::data(&input, e),
    })?;
    let mut w = create(&output)?;
    model.write(&mut w).map_err(PipelineError::io(&output))?;
    drop(w);
    write_meta(&output, "train", cfg, None, &[])?;
    Ok(StageReport {
        notes: vec![format!("order {order}, |V| = {}", model.vocab().size())],
        outputs: vec![output],
    })
}

fn load_model(path: &Path) -> Result<NgramModel> {
    NgramModel::read(open(path)?).map_err(|e| PipelineError::data(path, e))
}

/// Scores with `model` either every sentence of the `pairs` files (ids
/// `<pair_id>:good` / `<pair_id>:bad`) or every non-blank line of `input`
/// (ids are 0-based line numbers). Writes one JSON score per line.
pub fn cmd_score(cfg: &RunConfig) -> Result<StageReport> {
    let model_path = cfg.path("model")?;
    let output = cfg.path("output")?;
    let model = load_model(&model_path)?;
    let jobs: Vec<(String, String)> = if cfg.get("pairs").is_some() {
        read_pair_files(cfg)?
            .into_iter()
            .flat_map(|p| [(p.good_id(), p.good.clone()), (p.bad_id(), p.bad.clone())])
            .collect()
    } else {
        let input = cfg
            .path("input")
            .map_err(|_| PipelineError::Usage("score needs `pairs` or `input`".into()))?;
        read_lines(&input)?
            .into_iter()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| (i.to_string(), l))
            .collect()
    };
    let scores: Vec<SentenceScore> = jobs
        .par_iter()
        .map(|(id, text)| {
            let tokens: Vec<&str> = text.split_whitespace().collect();
            model.score(id, &tokens)
        })
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| PipelineError::data(&model_path, e))?;
    let mut w = create(&output)?;
    lm::write_scores(&mut w, &scores).map_err(PipelineError::io(&output))?;
    drop(w);
    let mut notes = vec![format!("scored {} sentences", scores.len())];
    if let Ok(ppl) = lm::perplexity_of(&scores) {
        notes.push(format!("perplexity {ppl:.4}"));
    }
    write_meta(&output, "score", cfg, None, &[])?;
    Ok(StageReport {
        outputs: vec![output],
        notes,
    })
}

/// Parses `ARCH:CORPUS:SEED=PATH`.
pub fn parse_run(spec: &str, reg: &Registry) -> Result<(ModelKey, PathBuf)> {
    let bad = || PipelineError::Usage(format!("run {spec:?} is not ARCH:CORPUS:SEED=PATH"));
    let (key, path) = spec.split_once('=').ok_or_else(bad)?;
    let mut parts = key.split(':');
    let (Some(arch), Some(corpus), Some(seed), None) =
        (parts.next(), parts.next(), parts.next(), parts.next())
    else {
        return Err(bad());
    };
    let seed: u64 = seed.parse().map_err(|_| bad())?;
    let key = ModelKey::new(arch, corpus, seed, reg)
        .map_err(|e| PipelineError::Usage(format!("run {spec:?}: {e}")))?;
    if path.is_empty() {
        return Err(bad());
    }
    Ok((key, PathBuf::from(path)))
}

/// A model file, recognized by its header line, or a score file.
fn load_scorer(path: &Path) -> Result<Box<dyn SentenceScorer>> {
    let mut first = String::new();
    open(path)?
        .read_line(&mut first)
        .map_err(PipelineError::io(path))?;
    if first.trim_end() == MODEL_HEADER {
        Ok(Box::new(load_model(path)?))
    } else {
        let table = lm::load_scores(open(path)?).map_err(|e| PipelineError::data(path, e))?;
        Ok(Box::new(table))
    }
}

/// (architecture, corpus, seed or all, benchmark, reason)
type MissingRow = (String, String, Option<u64>, String, String);

fn missing_csv(rows: &[MissingRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["architecture", "corpus", "seed", "benchmark", "reason"])
        .expect("in memory");
    for (a, c, s, b, why) in rows {
        let seed = s.map(|s| s.to_string()).unwrap_or_else(|| "all".into());
        w.write_record([a, c, &seed, b, why]).expect("in memory");
    }
    String::from_utf8(w.into_inner().expect("in memory")).expect("utf-8")
}

/// Evaluates every run on every benchmark of the `pairs` files.
///
/// Writes `results.jsonl` (or `output`) and, next to it, `<stem>.missing.csv`
/// listing cells that could not be computed: a benchmark a run has no
/// scores for, or an (architecture, corpus, seed) combination absent from
/// the runs while other corpora or the full-corpus baseline have it. In
/// strict mode any missing cell makes the stage fail after writing both.
pub fn cmd_eval(cfg: &RunConfig) -> Result<StageReport> {
    let reg = registry(cfg)?;
    let pairs = read_pair_files(cfg)?;
    let runs = cfg.list("runs");
    if runs.is_empty() {
        return Err(PipelineError::Usage(
            "missing required setting `runs`".into(),
        ));
    }
    let output = output_or(cfg, "results.jsonl")?;
    let runs: Vec<(ModelKey, PathBuf)> = runs
        .iter()
        .map(|r| parse_run(r, &reg))
        .collect::<Result<_>>()?;
    for (_, p) in &runs {
        if !p.exists() {
            return Err(PipelineError::MissingInput(p.clone()));
        }
    }

    let mut results: Vec<BenchmarkResult> = Vec::new();
    let mut missing: Vec<MissingRow> = Vec::new();
    for (key, path) in &runs {
        let scorer = load_scorer(path)?;
        for (bench, r) in eval::evaluate(scorer.as_ref(), &pairs, key) {
            match r {
                Ok(r) => results.push(r),
                Err(e) => missing.push((
                    key.architecture.clone(),
                    key.corpus.clone(),
                    Some(key.seed),
                    bench,
                    e.to_string(),
                )),
            }
        }
    }
    results.sort_by(|a, b| (&a.model, &a.benchmark).cmp(&(&b.model, &b.benchmark)));
    let rep =
        eval::aggregate(&results, &reg).map_err(|e| PipelineError::Usage(format!("runs: {e}")))?;
    for m in rep.missing {
        let failed =
            |r: &&MissingRow| r.0 == m.architecture && r.1 == m.corpus && r.3 == m.benchmark;
        if m.seed.is_some() && missing.iter().any(|r| failed(&r) && r.2 == m.seed) {
            continue;
        }
        let why = if m.seed.is_some() {
            "run not evaluated"
        } else {
            "no full-corpus baseline"
        };
        missing.push((m.architecture, m.corpus, m.seed, m.benchmark, why.into()));
    }
    missing.sort();

    let mut w = create(&output)?;
    eval::write_results(&mut w, &results).map_err(|e| PipelineError::data(&output, e))?;
    drop(w);
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let missing_path = output.with_file_name(format!("{stem}.missing.csv"));
    write_file(&missing_path, missing_csv(&missing))?;
    for p in [&output, &missing_path] {
        write_meta(
            p,
            "eval",
            cfg,
            None,
            &[("missing_cells", missing.len().to_string())],
        )?;
    }
    let notes = vec![format!(
        "{} result(s) for {} run(s); {} missing cell(s)",
        results.len(),
        runs.len(),
        missing.len()
    )];
    if cfg.strict() && !missing.is_empty() {
        return Err(PipelineError::MissingCells {
            count: missing.len(),
            report: missing_path,
        });
    }
    Ok(StageReport {
        outputs: vec![output, missing_path],
        notes,
    })
}

/// Aggregates `results` files into the report tables under `out_dir`. In
/// strict mode missing cells make the stage fail after writing.
pub fn cmd_report(cfg: &RunConfig) -> Result<StageReport> {
    let reg = registry(cfg)?;
    let out_dir = cfg.path("out_dir")?;
    let mut results = Vec::new();
    for p in cfg.paths("results")? {
        results.extend(eval::read_results(open(&p)?).map_err(|e| PipelineError::data(&p, e))?);
    }
    let rep = eval::aggregate(&results, &reg).map_err(|e| PipelineError::Data {
        path: cfg.path("results").unwrap_or_default(),
        message: e.to_string(),
    })?;
    let mut outputs = Vec::new();
    for (name, body) in report::render(&rep) {
        let p = out_dir.join(name);
        write_file(&p, body)?;
        write_meta(&p, "report", cfg, None, &[])?;
        outputs.push(p);
    }
    let mut notes = Vec::new();
    for a in &rep.summaries {
        if let Some(d) = a.mean_targeted_acc_delta {
            notes.push(format!(
                "{}: mean targeted accDelta {d:.4} over {} cell(s)",
                a.architecture, a.targeted_cells
            ));
        }
    }
    if cfg.strict() && !rep.missing.is_empty() {
        return Err(PipelineError::MissingCells {
            count: rep.missing.len(),
            report: out_dir.join("missing.csv"),
        });
    }
    Ok(StageReport { outputs, notes })
}

/// Converts BLiMP JSONL files (`input`) into one pair file (`output`).
pub fn cmd_ingest_blimp(cfg: &RunConfig) -> Result<StageReport> {
    let output = cfg.path("output")?;
    let mut pairs = Vec::new();
    for p in cfg.paths("input")? {
        pairs.extend(eval::ingest_blimp(open(&p)?).map_err(|e| PipelineError::data(&p, e))?);
    }
    let mut w = create(&output)?;
    eval::write_pairs(&mut w, &pairs).map_err(|e| PipelineError::data(&output, e))?;
    w.flush().map_err(PipelineError::io(&output))?;
    drop(w);
    write_meta(&output, "ingest-blimp", cfg, None, &[])?;
    Ok(StageReport {
        notes: vec![format!("{} pairs", pairs.len())],
        outputs: vec![output],
    })
}

/// Regenerates the benchmark-derived word lists from `pairs` into `out_dir`.
pub fn cmd_wordlists(cfg: &RunConfig) -> Result<StageReport> {
    let reg = registry(cfg)?;
    let out_dir = cfg.path("out_dir")?;
    let pairs = read_pair_files(cfg)?;
    let mut report = StageReport::default();
    for (list, words) in wordlists::extract_word_lists(&pairs, &reg) {
        let p = out_dir.join(format!("{list}.txt"));
        let mut body = String::from("# extracted from benchmark pairs by `fict wordlists`\n");
        for w in &words {
            body.push_str(w);
            body.push('\n');
        }
        write_file(&p, body)?;
        write_meta(&p, "wordlists", cfg, None, &[])?;
        report
            .notes
            .push(format!("{list}: {} entries", words.len()));
        report.outputs.push(p);
    }
    Ok(report)
}
