//! Reference-based (F1, EM, BLEU, ROUGE-L) and knowledge-based (K-F1,
//! K-F1++) token metrics.
//!
//! All metrics work on [`normalize_with`] tokens. Multi-reference items take
//! the max over references, except BLEU which clips against all references
//! jointly.

pub mod bleu;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bleu::{sentence_stats, BleuStats};

use crate::corpus::{Corpus, ItemKey, ResponseSet};
use crate::diagnostics::{Diagnostic, Diagnostics};
use crate::textnorm::{normalize_with, overlap_with_mode, NormalizeOptions, Overlap, TextConfig, TokenBag};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("{candidates} candidates but {references} reference sets")]
    LengthMismatch { candidates: usize, references: usize },
    #[error("response set `{0}` is empty")]
    EmptyResponses(String),
}

/// How question tokens are removed from the response for K-F1++.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionSubtraction {
    /// Drop every occurrence of any token type present in the question.
    #[default]
    Type,
    /// Drop one response occurrence per question occurrence.
    Occurrence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MetricConfig {
    pub text: TextConfig,
    pub subtraction: QuestionSubtraction,
}

fn norm(text: &str, config: &TextConfig) -> Vec<String> {
    normalize_with(text, config.normalize)
}

fn max_over<S: AsRef<str>>(refs: &[S], mut f: impl FnMut(&str) -> f64) -> f64 {
    refs.iter().map(|r| f(r.as_ref())).fold(0.0, f64::max)
}

pub fn token_f1<S: AsRef<str>>(response: &str, references: &[S]) -> f64 {
    token_f1_with(response, references, TextConfig::default())
}

/// Max over references of bag-overlap F1.
pub fn token_f1_with<S: AsRef<str>>(response: &str, references: &[S], config: TextConfig) -> f64 {
    let r = TokenBag::from_tokens(norm(response, &config));
    max_over(references, |g| {
        let g = TokenBag::from_tokens(norm(g, &config));
        overlap_with_mode(&r, &g, config.overlap).f1
    })
}

pub fn exact_match<S: AsRef<str>>(response: &str, references: &[S]) -> f64 {
    exact_match_with(response, references, NormalizeOptions::default())
}

/// 1 iff the normalized response equals some normalized reference. An
/// empty normalized response never matches.
pub fn exact_match_with<S: AsRef<str>>(response: &str, references: &[S], options: NormalizeOptions) -> f64 {
    let r = normalize_with(response, options);
    if r.is_empty() {
        return 0.0;
    }
    let hit = references
        .iter()
        .any(|g| normalize_with(g.as_ref(), options) == r);
    if hit {
        1.0
    } else {
        0.0
    }
}

/// Longest common subsequence length, O(|a|·|b|) time and O(|b|) memory.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

fn rouge_l_tokens(cand: &[String], reference: &[String]) -> f64 {
    let lcs = lcs_len(cand, reference);
    Overlap::from_counts(lcs, cand.len(), reference.len()).f1
}

pub fn rouge_l<S: AsRef<str>>(response: &str, references: &[S]) -> f64 {
    rouge_l_with(response, references, NormalizeOptions::default())
}

/// Max over references of ROUGE-L F1 (P = LCS/|cand|, R = LCS/|ref|).
pub fn rouge_l_with<S: AsRef<str>>(response: &str, references: &[S], options: NormalizeOptions) -> f64 {
    let c = normalize_with(response, options);
    max_over(references, |g| rouge_l_tokens(&c, &normalize_with(g, options)))
}

pub fn corpus_bleu<C: AsRef<str>, R: AsRef<str>>(
    candidates: &[C],
    references: &[Vec<R>],
) -> Result<f64, MetricsError> {
    corpus_bleu_with(candidates, references, NormalizeOptions::default())
}

/// Corpus-level BLEU-4 on a 0-100 scale.
pub fn corpus_bleu_with<C: AsRef<str>, R: AsRef<str>>(
    candidates: &[C],
    references: &[Vec<R>],
    options: NormalizeOptions,
) -> Result<f64, MetricsError> {
    if candidates.len() != references.len() {
        return Err(MetricsError::LengthMismatch {
            candidates: candidates.len(),
            references: references.len(),
        });
    }
    let mut total = BleuStats::default();
    for (c, refs) in candidates.iter().zip(references) {
        total.merge(&item_bleu_stats(c.as_ref(), refs, options));
    }
    Ok(total.score())
}

pub fn item_bleu_stats<S: AsRef<str>>(candidate: &str, references: &[S], options: NormalizeOptions) -> BleuStats {
    let c = normalize_with(candidate, options);
    let refs: Vec<Vec<String>> = references
        .iter()
        .map(|r| normalize_with(r.as_ref(), options))
        .collect();
    sentence_stats(&c, &refs)
}

pub fn knowledge_f1(response: &str, knowledge: &str) -> Overlap {
    knowledge_f1_with(response, knowledge, TextConfig::default())
}

/// Overlap of the response (precision side) against the knowledge text
/// (recall side).
pub fn knowledge_f1_with(response: &str, knowledge: &str, config: TextConfig) -> Overlap {
    let r = TokenBag::from_tokens(norm(response, &config));
    let k = TokenBag::from_tokens(norm(knowledge, &config));
    overlap_with_mode(&r, &k, config.overlap)
}

/// Response tokens left after removing question tokens.
pub fn subtract_question(response: &[String], question: &[String], mode: QuestionSubtraction) -> Vec<String> {
    match mode {
        QuestionSubtraction::Type => {
            let types: BTreeSet<&str> = question.iter().map(String::as_str).collect();
            response
                .iter()
                .filter(|t| !types.contains(t.as_str()))
                .cloned()
                .collect()
        }
        QuestionSubtraction::Occurrence => {
            let q = TokenBag::from_tokens(question.iter().cloned());
            let mut removed = std::collections::BTreeMap::<&str, usize>::new();
            response
                .iter()
                .filter(|t| {
                    let used = removed.entry(t.as_str()).or_insert(0);
                    if *used < q.count(t) {
                        *used += 1;
                        false
                    } else {
                        true
                    }
                })
                .cloned()
                .collect()
        }
    }
}

pub fn knowledge_f1_pp(question: &str, response: &str, knowledge: &str) -> Overlap {
    knowledge_f1_pp_with(question, response, knowledge, MetricConfig::default())
}

/// K-F1 after removing question tokens from the response. An empty
/// filtered response scores all zeros.
pub fn knowledge_f1_pp_with(question: &str, response: &str, knowledge: &str, config: MetricConfig) -> Overlap {
    let filtered = subtract_question(
        &norm(response, &config.text),
        &norm(question, &config.text),
        config.subtraction,
    );
    if filtered.is_empty() {
        return Overlap::ZERO;
    }
    let r = TokenBag::from_tokens(filtered);
    let k = TokenBag::from_tokens(norm(knowledge, &config.text));
    overlap_with_mode(&r, &k, config.text.overlap)
}

/// Scores for one item. Reference metrics are `None` without references,
/// knowledge metrics `None` without a snippet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    #[serde(flatten)]
    pub item_key: ItemKey,
    pub token_f1: Option<f64>,
    pub exact_match: Option<f64>,
    pub rouge_l: Option<f64>,
    pub bleu_stats: Option<BleuStats>,
    /// Add-one smoothed sentence BLEU, for inspection only.
    pub sentence_bleu: Option<f64>,
    pub k_f1: Option<Overlap>,
    pub k_f1_pp: Option<Overlap>,
}

/// One Table-2 row. Means are percentages, BLEU is 0-100.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusScores {
    pub model_name: String,
    pub items: usize,
    pub reference_items: usize,
    pub knowledge_items: usize,
    pub token_f1: Option<f64>,
    pub exact_match: Option<f64>,
    pub bleu: Option<f64>,
    pub rouge_l: Option<f64>,
    pub k_f1: Option<f64>,
    pub k_f1_pp: Option<f64>,
}

impl CorpusScores {
    /// K-F1 minus K-F1++, in points.
    pub fn knowledge_gap(&self) -> Option<f64> {
        Some(self.k_f1? - self.k_f1_pp?)
    }
}

#[derive(Debug, Clone)]
pub struct ModelScores {
    pub rows: Vec<ScoreRow>,
    pub summary: CorpusScores,
    pub diagnostics: Diagnostics,
}

pub fn score_item<S: AsRef<str>>(
    key: &ItemKey,
    question: Option<&str>,
    response: &str,
    references: Option<&[S]>,
    knowledge: Option<&str>,
    config: &MetricConfig,
) -> ScoreRow {
    let opts = config.text.normalize;
    let bleu_stats = references.map(|r| item_bleu_stats(response, r, opts));
    let k_f1 = knowledge.map(|k| knowledge_f1_with(response, k, config.text));
    let k_f1_pp = knowledge.map(|k| knowledge_f1_pp_with(question.unwrap_or(""), response, k, *config));
    ScoreRow {
        item_key: key.clone(),
        token_f1: references.map(|r| token_f1_with(response, r, config.text)),
        exact_match: references.map(|r| exact_match_with(response, r, opts)),
        rouge_l: references.map(|r| rouge_l_with(response, r, opts)),
        sentence_bleu: bleu_stats.map(|s| s.smoothed_score()),
        bleu_stats,
        k_f1,
        k_f1_pp,
    }
}

fn mean_pct(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| 100.0 * sum / n as f64)
}

/// Aggregates rows into a Table-2 row. Rows are summed in the order given.
pub fn summarize(model_name: &str, rows: &[ScoreRow]) -> CorpusScores {
    let with_refs: Vec<&ScoreRow> = rows.iter().filter(|r| r.bleu_stats.is_some()).collect();
    let with_k: Vec<&ScoreRow> = rows.iter().filter(|r| r.k_f1.is_some()).collect();
    let bleu = (!with_refs.is_empty()).then(|| {
        let mut total = BleuStats::default();
        for r in &with_refs {
            total.merge(r.bleu_stats.as_ref().expect("filtered"));
        }
        total.score()
    });
    CorpusScores {
        model_name: model_name.to_owned(),
        items: rows.len(),
        reference_items: with_refs.len(),
        knowledge_items: with_k.len(),
        token_f1: mean_pct(rows.iter().filter_map(|r| r.token_f1)),
        exact_match: mean_pct(rows.iter().filter_map(|r| r.exact_match)),
        bleu,
        rouge_l: mean_pct(rows.iter().filter_map(|r| r.rouge_l)),
        k_f1: mean_pct(with_k.iter().filter_map(|r| r.k_f1.map(|o| o.f1))),
        k_f1_pp: mean_pct(with_k.iter().filter_map(|r| r.k_f1_pp.map(|o| o.f1))),
    }
}

/// Scores every response of one model against the corpus.
pub fn score_model(
    responses: &ResponseSet,
    corpus: &Corpus,
    config: &MetricConfig,
) -> Result<ModelScores, MetricsError> {
    if responses.is_empty() {
        return Err(MetricsError::EmptyResponses(responses.model_name.clone()));
    }
    let mut diags = Diagnostics::new();
    let mut rows = Vec::with_capacity(responses.len());
    for (key, response) in responses.iter() {
        let refs = corpus.references(key);
        if refs.is_none() {
            diags.push(Diagnostic::warning(format!(
                "{key}: no references, excluded from reference-based metrics"
            )));
        }
        let knowledge = corpus.knowledge(key).map(|k| k.text.as_str());
        if knowledge.is_none() {
            diags.push(Diagnostic::warning(format!(
                "{key}: no knowledge snippet, excluded from K-F1/K-F1++"
            )));
        }
        rows.push(score_item(
            key,
            corpus.question(key),
            response,
            refs.as_deref(),
            knowledge,
            config,
        ));
    }
    let summary = summarize(&responses.model_name, &rows);
    Ok(ModelScores {
        rows,
        summary,
        diagnostics: diags,
    })
}
