//! Minimal-pair evaluation: TSE accuracy, PΔ, accΔ, the statistics used to
//! compare models, and aggregation into report tables.

mod aggregate;
mod metrics;
pub mod pairs;
pub mod report;
pub mod stats;

use thiserror::Error;

use crate::lm::LmError;

pub use aggregate::{
    aggregate, AccDeltaCell, ArchitectureSummary, MissingCell, PDeltaRow, PerplexityRow,
    PerplexityTest, Report,
};
pub use metrics::{
    acc_delta, accuracy_from_deltas, evaluate, p_delta, read_results, tse_accuracy, write_results,
    BenchmarkResult, ModelKey, FULL,
};
pub use pairs::{ingest_blimp, read_pairs, tokenize, write_pairs, MinimalPair};
pub use stats::{paired_t, pearson, TTest};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("no pairs to evaluate")]
    EmptyPairs,
    #[error("pairs from different benchmarks ({0:?}, {1:?}) in one evaluation")]
    MixedBenchmarks(String, String),
    #[error("non-finite log-probability")]
    NonFinite,
    #[error("accDelta needs at least one full-corpus seed")]
    EmptySeeds,
    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("correlation undefined for constant input")]
    ConstantInput,
    #[error("paired t-test undefined: differences have zero variance")]
    DegenerateTest,
    #[error("invalid model key: {0}")]
    InvalidKey(String),
    #[error(transparent)]
    Lm(#[from] LmError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
