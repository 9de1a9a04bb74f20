use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fict_core::filters::Registry;
use fict_core::pipeline::{self, PipelineError, RunConfig, StageReport, ToyOptions};

/// Filtered-corpus training pipeline: filter annotated corpora, downsample,
/// train n-gram models, score minimal pairs and report accuracy deltas.
///
/// Settings come from an optional `key = value` config file (--config) and
/// are overridden by flags and by --set KEY=VALUE. Exit codes: 0 success,
/// 1 usage error, 2 data error.
#[derive(Parser)]
#[command(name = "fict", version)]
struct Cli {
    /// Config file with `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override any config key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Skip and count malformed input instead of aborting; report missing
    /// evaluation cells without failing.
    #[arg(long, global = true)]
    lenient: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply filters to a CoNLL-U corpus; writes kept/discarded corpora and filter_stats.csv.
    Filter {
        #[arg(long)]
        conllu: Option<String>,
        #[arg(long)]
        out_dir: Option<String>,
        /// Filter names (repeatable or comma-separated).
        #[arg(long = "filter", value_name = "NAME")]
        filters: Vec<String>,
        /// Apply every registered filter.
        #[arg(long)]
        all: bool,
        #[command(flatten)]
        reg: RegistryArgs,
    },
    /// Uniformly sample lines of a text corpus (or replay a manifest).
    Downsample {
        #[arg(long)]
        input: Option<String>,
        #[arg(long)]
        output: Option<String>,
        #[arg(long)]
        target_lines: Option<String>,
        #[arg(long)]
        seed: Option<String>,
        #[arg(long)]
        manifest: Option<String>,
    },
    /// Line, token and type counts of text corpora.
    Stats {
        /// Text corpora (repeatable).
        #[arg(long = "input")]
        inputs: Vec<String>,
        #[arg(long)]
        output: Option<String>,
        #[arg(long)]
        out_dir: Option<String>,
    },
    /// Build a frequency-ranked vocabulary file.
    Vocab {
        #[arg(long)]
        input: Option<String>,
        #[arg(long)]
        output: Option<String>,
        #[arg(long)]
        vocab_size: Option<String>,
    },
    /// Train an interpolated Kneser-Ney n-gram model.
    Train {
        #[arg(long)]
        input: Option<String>,
        #[arg(long)]
        output: Option<String>,
        #[arg(long)]
        vocab: Option<String>,
        #[arg(long)]
        vocab_size: Option<String>,
        #[arg(long)]
        order: Option<String>,
        #[arg(long)]
        discount: Option<String>,
    },
    /// Score minimal pairs (or text lines) with a model.
    Score {
        #[arg(long)]
        model: Option<String>,
        /// Pair files (repeatable).
        #[arg(long = "pairs")]
        pairs: Vec<String>,
        #[arg(long)]
        input: Option<String>,
        #[arg(long)]
        output: Option<String>,
    },
    /// Minimal-pair accuracy and PDelta for each run and benchmark.
    Eval {
        /// Pair files (repeatable).
        #[arg(long = "pairs")]
        pairs: Vec<String>,
        /// ARCH:CORPUS:SEED=PATH, PATH a model or score file (repeatable).
        #[arg(long = "run")]
        runs: Vec<String>,
        #[arg(long)]
        output: Option<String>,
        #[arg(long)]
        out_dir: Option<String>,
        #[command(flatten)]
        reg: RegistryArgs,
    },
    /// Aggregate evaluation results into report tables.
    Report {
        /// Result files (repeatable).
        #[arg(long = "results")]
        results: Vec<String>,
        #[arg(long)]
        out_dir: Option<String>,
        #[command(flatten)]
        reg: RegistryArgs,
    },
    /// Convert BLiMP JSONL files into a pair file.
    IngestBlimp {
        /// BLiMP files (repeatable).
        #[arg(long = "input")]
        inputs: Vec<String>,
        #[arg(long)]
        output: Option<String>,
    },
    /// Re-derive the benchmark-based word lists from pair files.
    Wordlists {
        #[arg(long = "pairs")]
        pairs: Vec<String>,
        #[arg(long)]
        out_dir: Option<String>,
        #[command(flatten)]
        reg: RegistryArgs,
    },
    /// Write a synthetic annotated corpus and its benchmark pairs.
    Synth {
        #[arg(long)]
        out_dir: Option<String>,
        #[arg(long)]
        seed: Option<String>,
        #[arg(long)]
        sentences: Option<String>,
        #[arg(long)]
        pair_count: Option<String>,
    },
    /// Run the whole toy experiment under a directory.
    Toy {
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// List registered filters and the benchmarks they target.
    Filters {
        #[command(flatten)]
        reg: RegistryArgs,
    },
    /// List config keys.
    Keys,
}

#[derive(Args)]
struct RegistryArgs {
    /// Directory of *.filter files replacing or extending the built-ins.
    #[arg(long)]
    filter_dir: Option<String>,
    /// Directory of *.txt word lists replacing or extending the built-ins.
    #[arg(long)]
    wordlist_dir: Option<String>,
}

impl RegistryArgs {
    fn pairs(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("filter_dir", self.filter_dir.clone()),
            ("wordlist_dir", self.wordlist_dir.clone()),
        ]
    }
}

fn joined(v: &[String]) -> Option<String> {
    (!v.is_empty()).then(|| v.join(","))
}

fn config(
    cli: &Cli,
    flags: Vec<(&'static str, Option<String>)>,
) -> Result<RunConfig, PipelineError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::new(),
    };
    for (k, v) in flags {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
    }
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| PipelineError::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if cli.lenient {
        cfg.set("mode", "lenient")?;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<StageReport, PipelineError> {
    use Command::*;
    match &cli.command {
        Filter {
            conllu,
            out_dir,
            filters,
            all,
            reg,
        } => {
            if *all && !filters.is_empty() {
                return Err(PipelineError::Usage(
                    "--all and --filter are exclusive".into(),
                ));
            }
            let sel = if *all {
                Some("all".to_string())
            } else {
                joined(filters)
            };
            let mut flags = vec![
                ("conllu", conllu.clone()),
                ("out_dir", out_dir.clone()),
                ("filters", sel),
            ];
            flags.extend(reg.pairs());
            pipeline::cmd_filter(&config(cli, flags)?)
        }
        Downsample {
            input,
            output,
            target_lines,
            seed,
            manifest,
        } => pipeline::cmd_downsample(&config(
            cli,
            vec![
                ("input", input.clone()),
                ("output", output.clone()),
                ("target_lines", target_lines.clone()),
                ("seed", seed.clone()),
                ("manifest", manifest.clone()),
            ],
        )?),
        Stats {
            inputs,
            output,
            out_dir,
        } => pipeline::cmd_stats(&config(
            cli,
            vec![
                ("input", joined(inputs)),
                ("output", output.clone()),
                ("out_dir", out_dir.clone()),
            ],
        )?),
        Vocab {
            input,
            output,
            vocab_size,
        } => pipeline::cmd_vocab(&config(
            cli,
            vec![
                ("input", input.clone()),
                ("output", output.clone()),
                ("vocab_size", vocab_size.clone()),
            ],
        )?),
        Train {
            input,
            output,
            vocab,
            vocab_size,
            order,
            discount,
        } => pipeline::cmd_train(&config(
            cli,
            vec![
                ("input", input.clone()),
                ("output", output.clone()),
                ("vocab", vocab.clone()),
                ("vocab_size", vocab_size.clone()),
                ("order", order.clone()),
                ("discount", discount.clone()),
            ],
        )?),
        Score {
            model,
            pairs,
            input,
            output,
        } => pipeline::cmd_score(&config(
            cli,
            vec![
                ("model", model.clone()),
                ("pairs", joined(pairs)),
                ("input", input.clone()),
                ("output", output.clone()),
            ],
        )?),
        Eval {
            pairs,
            runs,
            output,
            out_dir,
            reg,
        } => {
            let mut flags = vec![
                ("pairs", joined(pairs)),
                ("runs", joined(runs)),
                ("output", output.clone()),
                ("out_dir", out_dir.clone()),
            ];
            flags.extend(reg.pairs());
            pipeline::cmd_eval(&config(cli, flags)?)
        }
        Report {
            results,
            out_dir,
            reg,
        } => {
            let mut flags = vec![("results", joined(results)), ("out_dir", out_dir.clone())];
            flags.extend(reg.pairs());
            pipeline::cmd_report(&config(cli, flags)?)
        }
        IngestBlimp { inputs, output } => pipeline::cmd_ingest_blimp(&config(
            cli,
            vec![("input", joined(inputs)), ("output", output.clone())],
        )?),
        Wordlists {
            pairs,
            out_dir,
            reg,
        } => {
            let mut flags = vec![("pairs", joined(pairs)), ("out_dir", out_dir.clone())];
            flags.extend(reg.pairs());
            pipeline::cmd_wordlists(&config(cli, flags)?)
        }
        Synth {
            out_dir,
            seed,
            sentences,
            pair_count,
        } => pipeline::cmd_synth(&config(
            cli,
            vec![
                ("out_dir", out_dir.clone()),
                ("seed", seed.clone()),
                ("sentences", sentences.clone()),
                ("pair_count", pair_count.clone()),
            ],
        )?),
        Toy { out_dir } => {
            config(cli, Vec::new())?;
            pipeline::run_toy(out_dir, &ToyOptions::default())
        }
        Filters { reg } => {
            let cfg = config(cli, reg.pairs())?;
            let dir = |k| cfg.get(k).map(PathBuf::from);
            let registry =
                Registry::load(dir("filter_dir").as_deref(), dir("wordlist_dir").as_deref())
                    .map_err(|e| PipelineError::Data {
                        path: dir("filter_dir")
                            .or(dir("wordlist_dir"))
                            .unwrap_or_default(),
                        message: e.to_string(),
                    })?;
            let notes = registry
                .specs()
                .iter()
                .map(|s| format!("{}\t{}", s.name, s.targeted_benchmarks.join(",")))
                .collect();
            Ok(StageReport {
                outputs: Vec::new(),
                notes,
            })
        }
        Keys => config(cli, Vec::new()).map(|_| StageReport {
            outputs: Vec::new(),
            notes: pipeline::KEYS
                .iter()
                .map(|(k, d)| format!("{k}\t{d}"))
                .collect(),
        }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(report) => {
            // a closed pipe (`fict filters | head`) is not an error
            let mut out = std::io::stdout().lock();
            let lines = report.notes.iter().cloned().chain(
                report
                    .outputs
                    .iter()
                    .map(|p| format!("wrote {}", p.display())),
            );
            for line in lines {
                if writeln!(out, "{line}").is_err() {
                    break;
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
