use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use super::{FilterError, FilterSpec};
use crate::treequery::WordLists;

macro_rules! embed {
    ($dir:literal, $ext:literal: $($name:literal),* $(,)?) => {
        [$(($name, include_str!(concat!("../../data/", $dir, "/", $name, ".", $ext)))),*]
    };
}

/// Default filter definitions, in canonical order.
const BUILTIN_FILTERS: [(&str, &str); 15] = embed!(
    "filters", "filter":
    "agr-pp-mod",
    "agr-rel-cl",
    "agr-re-irr-sv",
    "npi-only",
    "npi-sent-neg",
    "npi-sim-ques",
    "quantifier-superlative",
    "quantifier-existential-there",
    "binding-c-command",
    "binding-case",
    "binding-domain",
    "binding-reconstruction",
    "passive",
    "det-adj-noun",
    "det-noun",
);

/// Default word lists (name, file contents).
pub const BUILTIN_WORD_LISTS: [(&str, &str); 10] = embed!(
    "wordlists", "txt":
    "agr-re-irr-sv-nouns",
    "demonstratives",
    "det-noun-nouns",
    "npi",
    "object-pronouns",
    "passive-verbs",
    "reflexives",
    "subject-pronouns",
    "superlative-quantifiers",
    "weak-quantifiers",
);

/// Word-list file format: one entry per line, `#` comments and blank lines
/// ignored, surrounding whitespace trimmed.
pub fn parse_word_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn builtin_word_lists() -> WordLists {
    BUILTIN_WORD_LISTS
        .iter()
        .map(|(name, text)| (name.to_string(), parse_word_list(text)))
        .collect()
}

/// Reads every `*.txt` file in `dir` as a word list named after its stem.
pub fn load_word_lists(dir: &Path) -> Result<WordLists, FilterError> {
    let mut out = WordLists::new();
    for (stem, path) in files_with_ext(dir, "txt")? {
        out.insert(stem, parse_word_list(&fs::read_to_string(path)?));
    }
    Ok(out)
}

fn files_with_ext(dir: &Path, ext: &str) -> Result<Vec<(String, std::path::PathBuf)>, FilterError> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some(ext) {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            files.push((stem.to_string(), path.clone()));
        }
    }
    files.sort();
    Ok(files)
}

/// The set of filters available to a run.
#[derive(Debug, Clone)]
pub struct Registry {
    specs: Vec<FilterSpec>,
    word_lists: WordLists,
}

impl Registry {
    /// The fifteen default filters compiled against the default word lists.
    pub fn builtin() -> Self {
        Self::load(None, None).expect("built-in filter definitions are valid")
    }

    /// Starts from the defaults; files in `wordlist_dir` replace or add word
    /// lists by stem, and `*.filter` files in `filter_dir` replace filters of
    /// the same name or are appended after the defaults in file-name order.
    pub fn load(
        filter_dir: Option<&Path>,
        wordlist_dir: Option<&Path>,
    ) -> Result<Self, FilterError> {
        let mut lists = builtin_word_lists();
        if let Some(dir) = wordlist_dir {
            lists.extend(load_word_lists(dir)?);
        }
        let mut specs = Vec::new();
        for (name, text) in BUILTIN_FILTERS {
            specs.push(FilterSpec::parse(text, &format!("{name}.filter"), &lists)?);
        }
        if let Some(dir) = filter_dir {
            let mut overridden = BTreeSet::new();
            for (_, path) in files_with_ext(dir, "filter")? {
                let text = fs::read_to_string(&path)?;
                let spec = FilterSpec::parse(&text, &path.display().to_string(), &lists)?;
                if !overridden.insert(spec.name.clone()) {
                    return Err(FilterError::DuplicateFilter(spec.name));
                }
                match specs
                    .iter_mut()
                    .find(|s: &&mut FilterSpec| s.name == spec.name)
                {
                    Some(slot) => *slot = spec,
                    None => specs.push(spec),
                }
            }
        }
        Ok(Registry {
            specs,
            word_lists: lists,
        })
    }

    pub fn get(&self, name: &str) -> Result<&FilterSpec, FilterError> {
        self.specs
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| FilterError::UnknownFilter(name.to_string()))
    }

    pub fn specs(&self) -> &[FilterSpec] {
        &self.specs
    }

    pub fn names(&self) -> Vec<&str> {
        self.specs.iter().map(|s| s.name.as_str()).collect()
    }

    pub fn word_lists(&self) -> &WordLists {
        &self.word_lists
    }

    /// F(B): the filter targeting `benchmark`, if any.
    pub fn targeting(&self, benchmark: &str) -> Option<&FilterSpec> {
        self.specs.iter().find(|s| s.targets(benchmark))
    }
}

/// The default filters, in canonical order.
pub fn registry() -> Vec<FilterSpec> {
    Registry::builtin().specs
}
