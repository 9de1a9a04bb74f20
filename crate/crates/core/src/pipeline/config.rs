//! Run configuration: one `key = value` per line, `#` starts a comment line.
//! The same keys are set by command-line flags, which override the file.
//! Relative paths are resolved against the working directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::conllu::ParseMode;

/// Every accepted key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("conllu", "annotated corpus (CoNLL-U)"),
    ("input", "plain-text corpus, one tokenized sentence per line (comma-separated list for `stats`)"),
    ("output", "output file"),
    ("out_dir", "output directory"),
    ("pairs", "minimal-pair files (comma-separated)"),
    ("runs", "evaluated models as ARCH:CORPUS:SEED=PATH (comma-separated); PATH is a model or score file"),
    ("results", "evaluation result files (comma-separated)"),
    ("model", "n-gram model file"),
    ("vocab", "vocabulary file"),
    ("manifest", "sample manifest to replay"),
    ("filters", "`all` or comma-separated filter names"),
    ("filter_dir", "directory of extra or replacement *.filter files"),
    ("wordlist_dir", "directory of extra or replacement *.txt word lists"),
    ("mode", "`strict` (default) or `lenient`"),
    ("target_lines", "downsampling target"),
    ("seed", "sampling seed"),
    ("order", "n-gram order (default 3)"),
    ("discount", "KN discount, one value or one per order (default 0.75)"),
    ("vocab_size", "vocabulary size when none is given (default 50000)"),
    ("sentences", "synthetic corpus size (default 5000)"),
    ("pair_count", "synthetic targeted-benchmark size (default 200)"),
];

const INTEGER_KEYS: [&str; 6] = [
    "target_lines",
    "seed",
    "order",
    "vocab_size",
    "sentences",
    "pair_count",
];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

fn usage(msg: impl Into<String>) -> PipelineError {
    PipelineError::Usage(msg.into())
}

impl RunConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self, PipelineError> {
        let mut cfg = RunConfig::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("config line {}: expected key = value", i + 1)))?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| usage(format!("config line {}: {e}", i + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        if !path.exists() {
            return Err(PipelineError::MissingInput(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(PipelineError::io(path))?;
        Self::parse(&text)
    }

    /// Sets (or with an empty value, clears) a key after validating it.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), PipelineError> {
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(usage(format!("unknown config key {key:?}")));
        }
        if value.is_empty() {
            self.values.remove(key);
            return Ok(());
        }
        if INTEGER_KEYS.contains(&key) && value.parse::<u64>().is_err() {
            return Err(usage(format!(
                "{key} must be a non-negative integer, got {value:?}"
            )));
        }
        if key == "mode" && value != "strict" && value != "lenient" {
            return Err(usage(format!(
                "mode must be strict or lenient, got {value:?}"
            )));
        }
        if key == "discount" && parse_f64s(value).is_none() {
            return Err(usage(format!(
                "discount must be comma-separated numbers, got {value:?}"
            )));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn with(mut self, key: &str, value: impl AsRef<str>) -> Result<Self, PipelineError> {
        self.set(key, value.as_ref())?;
        Ok(self)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str, PipelineError> {
        self.get(key)
            .ok_or_else(|| usage(format!("missing required setting `{key}`")))
    }

    pub fn path(&self, key: &str) -> Result<PathBuf, PipelineError> {
        self.require(key).map(PathBuf::from)
    }

    pub fn list(&self, key: &str) -> Vec<String> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn paths(&self, key: &str) -> Result<Vec<PathBuf>, PipelineError> {
        let l = self.list(key);
        if l.is_empty() {
            return Err(usage(format!("missing required setting `{key}`")));
        }
        Ok(l.into_iter().map(PathBuf::from).collect())
    }

    /// Validated by [`RunConfig::set`], so parsing cannot fail here.
    pub fn u64(&self, key: &str) -> Option<u64> {
        self.get(key).map(|v| v.parse().expect("validated on set"))
    }

    pub fn require_u64(&self, key: &str) -> Result<u64, PipelineError> {
        self.require(key)?;
        Ok(self.u64(key).expect("present"))
    }

    pub fn discounts(&self) -> Option<Vec<f64>> {
        self.get("discount")
            .map(|v| parse_f64s(v).expect("validated on set"))
    }

    pub fn mode(&self) -> ParseMode {
        match self.get("mode") {
            Some("lenient") => ParseMode::Lenient,
            _ => ParseMode::Strict,
        }
    }

    pub fn strict(&self) -> bool {
        self.mode() == ParseMode::Strict
    }

    /// Canonical form: sorted `key=value` lines.
    pub fn to_text(&self) -> String {
        self.values
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    /// `sha256:` of [`RunConfig::to_text`].
    pub fn digest(&self) -> String {
        format!(
            "sha256:{}",
            hex::encode(Sha256::digest(self.to_text().as_bytes()))
        )
    }
}

fn parse_f64s(v: &str) -> Option<Vec<f64>> {
    v.split(',').map(|x| x.trim().parse::<f64>().ok()).collect()
}
