//! Evaluation toolkit for knowledge-grounded dialogue responses.
//!
//! * [`phenomena`]: lexical alignment, syntactic form and pronominals of
//!   responses, aggregated into per-model profiles.
//! * [`metrics`]: token F1, exact match, BLEU, ROUGE-L, K-F1 and K-F1++
//!   (knowledge overlap after discounting question tokens).
//! * [`humaneval`]: faithfulness judgments, pairwise preferences, trust
//!   choices, majority agreement and chi-square significance.
//!
//! Inputs are JSON Lines ([`corpus`]) and standard syntactic annotation
//! files ([`annotations`]). [`cli`] wires everything into the `groundeval`
//! binary and renders summary tables through [`report`].

pub mod annotations;
pub mod cli;
pub mod corpus;
pub mod diagnostics;
pub mod humaneval;
pub mod metrics;
pub mod phenomena;
pub mod report;
pub mod textnorm;

pub use corpus::{load_corpus, load_responses, Corpus, CorpusPaths, ItemKey, ResponseSet};
pub use diagnostics::{Diagnostic, Diagnostics, Severity};
pub use textnorm::{bag_overlap, normalize, NormalizeOptions, Overlap, OverlapMode, TextConfig, TokenBag};
