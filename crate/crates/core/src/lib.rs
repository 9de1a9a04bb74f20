//! Filtered-corpus training toolkit: CoNLL-U streaming, dependency-tree
//! pattern filters, corpus sampling, n-gram scoring and minimal-pair
//! evaluation.

pub mod conllu;
pub mod corpus;
pub mod eval;
pub mod filters;
pub mod lm;
pub mod pipeline;
pub mod synth;
pub mod treequery;
