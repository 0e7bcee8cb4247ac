//! Conversational grounding phenomena of responses: lexical alignment with
//! the preceding question, syntactic form and subject/object pronouns.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotations::{ConstituencyNode, DependencySentence, ParseIndex, ParsedResponse};
use crate::corpus::{Corpus, ItemKey, ResponseSet};
use crate::diagnostics::{Diagnostic, Diagnostics};
use crate::textnorm::{overlap_with_mode, surface_length, TextConfig, TokenBag};

/// Labels treated as transparent wrappers above the sentence node.
pub const WRAPPER_LABELS: [&str; 3] = ["ROOT", "TOP", "S1"];
/// Root labels that make a single-sentence response a short answer.
pub const SENTENCE_LABELS: [&str; 2] = ["S", "SINV"];
/// Dependency relations counted as subject or direct-object position.
pub const PRONOUN_RELATIONS: [&str; 3] = ["nsubj", "nsubj:pass", "obj"];

pub const DEFAULT_ALIGNMENT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StructureClass {
    Fragment,
    Short,
    Long,
}

impl fmt::Display for StructureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StructureClass::Fragment => "Fragment",
            StructureClass::Short => "Short",
            StructureClass::Long => "Long",
        })
    }
}

/// Unigram alignment of a response against its question. Precision is the
/// share of response tokens found in the question; recall the share of
/// question tokens echoed in the response.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AlignmentScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub overlap: usize,
    pub response_tokens: usize,
    pub question_tokens: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AlignmentLevel {
    High,
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MissingLayer {
    #[error("no constituency parse")]
    Constituency,
    #[error("no dependency parse")]
    Dependency,
}

pub fn lexical_alignment(question: &str, response: &str) -> AlignmentScore {
    lexical_alignment_with(question, response, TextConfig::default())
}

pub fn lexical_alignment_with(question: &str, response: &str, config: TextConfig) -> AlignmentScore {
    let r = TokenBag::from_text(response, config.normalize);
    let q = TokenBag::from_text(question, config.normalize);
    let o = overlap_with_mode(&r, &q, config.overlap);
    let (response_tokens, question_tokens) = match config.overlap {
        crate::textnorm::OverlapMode::Multiset => (r.len(), q.len()),
        crate::textnorm::OverlapMode::Set => (r.distinct(), q.distinct()),
    };
    AlignmentScore {
        precision: o.precision,
        recall: o.recall,
        f1: o.f1,
        overlap: o.overlap,
        response_tokens,
        question_tokens,
    }
}

/// Inclusive threshold on recall.
pub fn classify_alignment_level(score: &AlignmentScore, threshold: f64) -> AlignmentLevel {
    classify_alignment_level_with(score, threshold, true)
}

pub fn classify_alignment_level_with(
    score: &AlignmentScore,
    threshold: f64,
    inclusive: bool,
) -> AlignmentLevel {
    let high = if inclusive {
        score.recall >= threshold
    } else {
        score.recall > threshold
    };
    if high {
        AlignmentLevel::High
    } else {
        AlignmentLevel::Low
    }
}

/// Category part of a label, without function tags (`S-TPC` -> `S`).
fn base_label(label: &str) -> &str {
    match label.char_indices().skip(1).find(|&(_, c)| c == '-' || c == '=') {
        Some((i, _)) => &label[..i],
        None => label,
    }
}

/// The node whose label decides the class: descends through single-child
/// wrapper nodes.
pub fn decision_node(tree: &ConstituencyNode) -> &ConstituencyNode {
    let mut node = tree;
    while WRAPPER_LABELS.contains(&node.label.as_str()) && node.children.len() == 1 {
        node = &node.children[0];
    }
    node
}

/// Classifies from the constituency trees of one response.
pub fn classify_trees(trees: &[ConstituencyNode]) -> Option<StructureClass> {
    match trees {
        [] => None,
        [single] => {
            let label = base_label(&decision_node(single).label);
            Some(if SENTENCE_LABELS.contains(&label) {
                StructureClass::Short
            } else {
                StructureClass::Fragment
            })
        }
        _ => Some(StructureClass::Long),
    }
}

pub fn classify_structure(parsed: &ParsedResponse) -> Result<StructureClass, MissingLayer> {
    parsed
        .constituency
        .as_deref()
        .and_then(classify_trees)
        .ok_or(MissingLayer::Constituency)
}

/// True iff some PRON token sits in subject or direct-object position.
/// Expletives (`expl`) do not count.
pub fn sentences_have_pronoun(sentences: &[DependencySentence]) -> bool {
    sentences.iter().flatten().any(|t| {
        t.upos == "PRON" && PRONOUN_RELATIONS.contains(&t.deprel.as_str())
    })
}

pub fn detect_pronoun(parsed: &ParsedResponse) -> Result<bool, MissingLayer> {
    parsed
        .dependency
        .as_deref()
        .map(sentences_have_pronoun)
        .ok_or(MissingLayer::Dependency)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Mean of per-item scores.
    #[default]
    Macro,
    /// Scores from pooled overlap counts.
    Micro,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhenomenaConfig {
    pub text: TextConfig,
    pub threshold: f64,
    pub inclusive_threshold: bool,
    pub aggregation: Aggregation,
}

impl Default for PhenomenaConfig {
    fn default() -> Self {
        Self {
            text: TextConfig::default(),
            threshold: DEFAULT_ALIGNMENT_THRESHOLD,
            inclusive_threshold: true,
            aggregation: Aggregation::Macro,
        }
    }
}

/// Per-response phenomena. `structure`/`has_pronoun` are `None` when the
/// corresponding parse layer is missing; such items are excluded from that
/// percentage only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhenomenaProfile {
    #[serde(flatten)]
    pub item_key: ItemKey,
    pub length: usize,
    pub structure: Option<StructureClass>,
    pub alignment: AlignmentScore,
    pub alignment_level: AlignmentLevel,
    pub has_pronoun: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StructureShares {
    pub fragment: f64,
    pub short: f64,
    pub long: f64,
}

/// One Table-1 row. Percentages are in `[0, 100]`; alignment P/R/F1 are
/// fractions in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhenomenaSummary {
    pub model_name: String,
    pub items: usize,
    pub mean_length: f64,
    pub structure_items: usize,
    pub structure: Option<StructureShares>,
    pub alignment_precision: f64,
    pub alignment_recall: f64,
    pub alignment_f1: f64,
    pub high_alignment_pct: f64,
    pub pronoun_items: usize,
    pub pronoun_pct: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PhenomenaReport {
    pub profiles: Vec<PhenomenaProfile>,
    pub summary: PhenomenaSummary,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PhenomenaError {
    #[error("response set `{0}` is empty")]
    EmptyResponses(String),
    #[error("no question precedes item {0}")]
    MissingQuestion(ItemKey),
}

pub fn profile_item(
    key: &ItemKey,
    question: &str,
    response: &str,
    parsed: Option<&ParsedResponse>,
    config: &PhenomenaConfig,
) -> PhenomenaProfile {
    let alignment = lexical_alignment_with(question, response, config.text);
    PhenomenaProfile {
        item_key: key.clone(),
        length: surface_length(response),
        structure: parsed.and_then(|p| classify_structure(p).ok()),
        alignment_level: classify_alignment_level_with(
            &alignment,
            config.threshold,
            config.inclusive_threshold,
        ),
        alignment,
        has_pronoun: parsed.and_then(|p| detect_pronoun(p).ok()),
    }
}

/// Aggregates per-item profiles into a Table-1 row. Profiles are summed in
/// the order given; [`profile_model`] passes them sorted by item key.
pub fn summarize(model_name: &str, profiles: &[PhenomenaProfile], aggregation: Aggregation) -> PhenomenaSummary {
    let n = profiles.len();
    let mean = |sum: f64, count: usize| if count == 0 { 0.0 } else { sum / count as f64 };
    let mean_length = mean(profiles.iter().map(|p| p.length as f64).sum(), n);

    let classes: Vec<StructureClass> = profiles.iter().filter_map(|p| p.structure).collect();
    let share = |c: StructureClass| {
        100.0 * classes.iter().filter(|&&x| x == c).count() as f64 / classes.len() as f64
    };
    let structure = (!classes.is_empty()).then(|| StructureShares {
        fragment: share(StructureClass::Fragment),
        short: share(StructureClass::Short),
        long: share(StructureClass::Long),
    });

    let (alignment_precision, alignment_recall, alignment_f1) = match aggregation {
        Aggregation::Macro => (
            mean(profiles.iter().map(|p| p.alignment.precision).sum(), n),
            mean(profiles.iter().map(|p| p.alignment.recall).sum(), n),
            mean(profiles.iter().map(|p| p.alignment.f1).sum(), n),
        ),
        Aggregation::Micro => {
            let overlap: usize = profiles.iter().map(|p| p.alignment.overlap).sum();
            let resp: usize = profiles.iter().map(|p| p.alignment.response_tokens).sum();
            let ques: usize = profiles.iter().map(|p| p.alignment.question_tokens).sum();
            let o = crate::textnorm::Overlap::from_counts(overlap, resp, ques);
            (o.precision, o.recall, o.f1)
        }
    };
    let high = profiles
        .iter()
        .filter(|p| p.alignment_level == AlignmentLevel::High)
        .count();

    let pron: Vec<bool> = profiles.iter().filter_map(|p| p.has_pronoun).collect();
    let pronoun_pct = (!pron.is_empty())
        .then(|| 100.0 * pron.iter().filter(|&&b| b).count() as f64 / pron.len() as f64);

    PhenomenaSummary {
        model_name: model_name.to_owned(),
        items: n,
        mean_length,
        structure_items: classes.len(),
        structure,
        alignment_precision,
        alignment_recall,
        alignment_f1,
        high_alignment_pct: mean(100.0 * high as f64, n),
        pronoun_items: pron.len(),
        pronoun_pct,
    }
}

/// Profiles every response of one model and aggregates a Table-1 row.
pub fn profile_model(
    responses: &ResponseSet,
    corpus: &Corpus,
    parses: Option<&ParseIndex>,
    config: &PhenomenaConfig,
) -> Result<PhenomenaReport, PhenomenaError> {
    if responses.is_empty() {
        return Err(PhenomenaError::EmptyResponses(responses.model_name.clone()));
    }
    let mut diags = Diagnostics::new();
    let mut profiles = Vec::with_capacity(responses.len());
    let mut missing_trees = 0;
    let mut missing_deps = 0;
    for (key, response) in responses.iter() {
        let question = corpus
            .question(key)
            .ok_or_else(|| PhenomenaError::MissingQuestion(key.clone()))?;
        let parsed = parses.and_then(|p| p.response(key));
        let profile = profile_item(key, question, response, parsed.as_ref(), config);
        if profile.structure.is_none() {
            missing_trees += 1;
            diags.push(Diagnostic::warning(format!(
                "{key}: no constituency parse, excluded from structure percentages"
            )));
        }
        if profile.has_pronoun.is_none() {
            missing_deps += 1;
            diags.push(Diagnostic::warning(format!(
                "{key}: no dependency parse, excluded from pronoun percentage"
            )));
        }
        profiles.push(profile);
    }
    if missing_trees + missing_deps > 0 {
        diags.push(Diagnostic::warning(format!(
            "{}: {missing_trees} item(s) without constituency parse, {missing_deps} without dependency parse",
            responses.model_name
        )));
    }
    let summary = summarize(&responses.model_name, &profiles, config.aggregation);
    Ok(PhenomenaReport {
        profiles,
        summary,
        diagnostics: diags,
    })
}
