//! Pipeline stages: filter, downsample, stats, vocab, train, score, eval and
//! report. Each stage reads earlier artifacts by path and writes plain files;
//! every output `F` gets a sidecar `F.meta`:
//!
//! ```text
//! # fict artifact meta v1
//! stage=filter
//! config_digest=sha256:<hex of the canonical run config>
//! seed=<seed or none>
//! ```
//!
//! optionally followed by stage-specific `key=value` lines. There are no
//! timestamps, so rerunning a stage with the same config and inputs
//! reproduces every file byte for byte.

mod config;
mod stages;
pub mod toy;

pub use toy::{cmd_synth, run_toy, ToyOptions};

use std::fmt::Display;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter};
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{RunConfig, KEYS};
pub use stages::{
    cmd_downsample, cmd_eval, cmd_filter, cmd_ingest_blimp, cmd_report, cmd_score, cmd_stats,
    cmd_train, cmd_vocab, cmd_wordlists, parse_run, StageReport,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Usage(String),
    #[error("missing input: expected {}", .0.display())]
    MissingInput(PathBuf),
    #[error("{}: {message}", path.display())]
    Data { path: PathBuf, message: String },
    #[error("{count} missing evaluation cell(s), listed in {}", report.display())]
    MissingCells { count: usize, report: PathBuf },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl PipelineError {
    /// 1 for usage errors, 2 for everything caused by data.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Usage(_) => 1,
            _ => 2,
        }
    }

    pub(crate) fn io(path: &Path) -> impl FnOnce(io::Error) -> PipelineError + '_ {
        move |source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn data(path: &Path, e: impl Display) -> PipelineError {
        PipelineError::Data {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }
}

pub(crate) fn open(path: &Path) -> Result<BufReader<File>, PipelineError> {
    if !path.exists() {
        return Err(PipelineError::MissingInput(path.to_path_buf()));
    }
    File::open(path)
        .map(BufReader::new)
        .map_err(PipelineError::io(path))
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>, PipelineError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(PipelineError::io(dir))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(PipelineError::io(path))
}

pub(crate) fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(PipelineError::io(dir))?;
    }
    fs::write(path, bytes).map_err(PipelineError::io(path))
}

/// `path` with `suffix` appended to its file name.
pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn meta_path(artifact: &Path) -> PathBuf {
    with_suffix(artifact, ".meta")
}

pub(crate) fn write_meta(
    artifact: &Path,
    stage: &str,
    cfg: &RunConfig,
    seed: Option<u64>,
    extra: &[(&str, String)],
) -> Result<(), PipelineError> {
    let mut text = format!(
        "# fict artifact meta v1\nstage={stage}\nconfig_digest={}\nseed={}\n",
        cfg.digest(),
        seed.map(|s| s.to_string()).unwrap_or_else(|| "none".into())
    );
    for (k, v) in extra {
        text.push_str(&format!("{k}={v}\n"));
    }
    write_file(&meta_path(artifact), text)
}
