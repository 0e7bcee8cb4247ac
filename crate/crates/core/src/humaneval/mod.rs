//! Human-evaluation records and their aggregation: faithfulness judgments,
//! pairwise preferences, trust choices, majority agreement and chi-square
//! significance.

pub mod chisq;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::BufRead;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use chisq::{chi_square_gof, chi_square_sf, chi_square_uniform, regularized_gamma_q, ChiSquareError, ChiSquareResult};

use crate::corpus::ItemKey;
use crate::diagnostics::{Diagnostic, Diagnostics};

#[derive(Debug, Error)]
pub enum HumanEvalError {
    #[error("invalid annotation records:\n{0}")]
    Invalid(Diagnostics),
    #[error(transparent)]
    ChiSquare(#[from] ChiSquareError),
}

/// Reads one record per non-blank line; every bad line yields one error.
pub fn read_records<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>, HumanEvalError> {
    let mut diags = Diagnostics::new();
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        match line {
            Ok(l) if l.trim().is_empty() => {}
            Ok(l) => match serde_json::from_str(&l) {
                Ok(r) => out.push(r),
                Err(e) => diags.push(Diagnostic::error(format!("malformed record: {e}")).at_line(line_no)),
            },
            Err(e) => diags.push(Diagnostic::error(format!("unreadable line: {e}")).at_line(line_no)),
        }
    }
    if diags.has_errors() {
        Err(HumanEvalError::Invalid(diags))
    } else {
        Ok(out)
    }
}

fn pct(count: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

/// True iff the modal label occurs in strictly more than half the labels.
pub fn has_majority<L: Ord>(labels: &[L]) -> bool {
    if labels.is_empty() {
        return false;
    }
    let mut counts: BTreeMap<&L, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    let modal = counts.values().copied().max().unwrap_or(0);
    2 * modal > labels.len()
}

/// Percentage of items whose annotations have a strict majority label.
pub fn majority_agreement<L: Ord>(items: &[Vec<L>]) -> f64 {
    let agreed = items.iter().filter(|labels| has_majority(labels)).count();
    pct(agreed as u64, items.len() as u64)
}

// ---------------------------------------------------------------------------
// Faithfulness judgments

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentRecord {
    #[serde(flatten)]
    pub item_key: ItemKey,
    pub model_name: String,
    pub annotator_id: String,
    pub plausible: bool,
    #[serde(default)]
    pub grounded: Option<bool>,
    #[serde(default)]
    pub faithful: Option<bool>,
}

impl JudgmentRecord {
    /// Skip-logic: grounded/faithful only follow a plausible rating, and a
    /// faithful response must be grounded.
    pub fn validate(&self) -> Result<(), String> {
        if !self.plausible && (self.grounded.is_some() || self.faithful.is_some()) {
            return Err(format!(
                "{} ({}, {}): grounded/faithful given for an implausible response",
                self.item_key, self.model_name, self.annotator_id
            ));
        }
        if self.faithful == Some(true) && self.grounded != Some(true) {
            return Err(format!(
                "{} ({}, {}): faithful=true requires grounded=true",
                self.item_key, self.model_name, self.annotator_id
            ));
        }
        Ok(())
    }
}

/// One row of the faithfulness-judgment table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentSummary {
    pub model_name: String,
    pub annotations: usize,
    pub items: usize,
    pub plausible_pct: f64,
    pub grounded_pct: f64,
    pub faithful_pct: f64,
}

/// Per-model percentages over annotated instances; skipped categories count
/// as false. Exact duplicate records are merged with a warning.
pub fn aggregate_judgments(
    records: &[JudgmentRecord],
) -> Result<(Vec<JudgmentSummary>, Diagnostics), HumanEvalError> {
    let mut diags = Diagnostics::new();
    let mut errors = Diagnostics::new();
    let mut unique: BTreeMap<(String, ItemKey, String), &JudgmentRecord> = BTreeMap::new();
    for r in records {
        if let Err(msg) = r.validate() {
            errors.push(Diagnostic::error(msg));
            continue;
        }
        let key = (r.model_name.clone(), r.item_key.clone(), r.annotator_id.clone());
        match unique.get(&key) {
            Some(prev) if *prev == r => diags.push(Diagnostic::warning(format!(
                "{} ({}, {}): duplicate judgment ignored",
                r.item_key, r.model_name, r.annotator_id
            ))),
            Some(_) => errors.push(Diagnostic::error(format!(
                "{} ({}, {}): conflicting duplicate judgments",
                r.item_key, r.model_name, r.annotator_id
            ))),
            None => {
                unique.insert(key, r);
            }
        }
    }
    if errors.has_errors() {
        return Err(HumanEvalError::Invalid(errors));
    }
    let mut per_model: BTreeMap<&str, Vec<&JudgmentRecord>> = BTreeMap::new();
    for r in unique.values() {
        per_model.entry(r.model_name.as_str()).or_default().push(r);
    }
    let summaries = per_model
        .into_iter()
        .map(|(model, recs)| {
            let n = recs.len() as u64;
            let count = |f: &dyn Fn(&JudgmentRecord) -> bool| recs.iter().filter(|r| f(r)).count() as u64;
            let items: BTreeSet<&ItemKey> = recs.iter().map(|r| &r.item_key).collect();
            JudgmentSummary {
                model_name: model.to_owned(),
                annotations: recs.len(),
                items: items.len(),
                plausible_pct: pct(count(&|r| r.plausible), n),
                grounded_pct: pct(count(&|r| r.grounded == Some(true)), n),
                faithful_pct: pct(count(&|r| r.faithful == Some(true)), n),
            }
        })
        .collect();
    Ok((summaries, diags))
}

// ---------------------------------------------------------------------------
// Pairwise preferences

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreferenceChoice {
    Baseline,
    Variant,
    Both,
    None,
}

fn default_baseline() -> String {
    "baseline".into()
}

fn default_variant() -> String {
    "variant".into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceRecord {
    #[serde(flatten)]
    pub item_key: ItemKey,
    pub annotator_id: String,
    pub choice: PreferenceChoice,
    pub baseline_faithful: bool,
    pub variant_faithful: bool,
    #[serde(default = "default_baseline")]
    pub baseline_model: String,
    #[serde(default = "default_variant")]
    pub variant_model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<String>,
}

/// Selections of one side, split by that side's faithfulness label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SideTally {
    pub selected: u64,
    pub faithful: u64,
    pub unfaithful: u64,
}

impl SideTally {
    fn add(&mut self, faithful: bool) {
        self.selected += 1;
        if faithful {
            self.faithful += 1;
        } else {
            self.unfaithful += 1;
        }
    }

    pub fn faithful_pct(&self) -> f64 {
        pct(self.faithful, self.selected)
    }

    pub fn unfaithful_pct(&self) -> f64 {
        pct(self.unfaithful, self.selected)
    }
}

/// Which side of a comparison won significantly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Baseline,
    Variant,
}

/// One baseline-vs-variant block of the preference table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceBlock {
    pub baseline_model: String,
    pub variant_model: String,
    pub items: usize,
    pub annotations: u64,
    pub baseline: SideTally,
    pub variant: SideTally,
    pub none: u64,
    pub both: u64,
    /// Variant vs baseline selections against an even split.
    pub chi_square: Option<ChiSquareResult>,
    pub majority_agreement: f64,
    pub feedback_responses: usize,
}

impl PreferenceBlock {
    pub fn baseline_pct(&self) -> f64 {
        pct(self.baseline.selected, self.annotations)
    }

    pub fn variant_pct(&self) -> f64 {
        pct(self.variant.selected, self.annotations)
    }

    pub fn none_pct(&self) -> f64 {
        pct(self.none, self.annotations)
    }

    pub fn both_pct(&self) -> f64 {
        pct(self.both, self.annotations)
    }

    /// The side preferred significantly more often, if any.
    pub fn significant_side(&self) -> Option<Side> {
        let chi = self.chi_square?;
        if !chi.significant_at_05 {
            return None;
        }
        match self.variant.selected.cmp(&self.baseline.selected) {
            std::cmp::Ordering::Greater => Some(Side::Variant),
            std::cmp::Ordering::Less => Some(Side::Baseline),
            std::cmp::Ordering::Equal => None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct PreferenceConfig {
    /// When set, records for other items are rejected.
    pub known_items: Option<BTreeSet<ItemKey>>,
    /// Maximum distinct annotators per item.
    pub annotators_per_item: Option<usize>,
}

/// Tallies each comparison block. A "both" choice counts for both sides;
/// percentages use the total number of annotations as denominator.
pub fn aggregate_preferences(
    records: &[PreferenceRecord],
    config: &PreferenceConfig,
) -> Result<Vec<PreferenceBlock>, HumanEvalError> {
    type BlockKey = (String, String);
    let mut errors = Diagnostics::new();
    let mut blocks: BTreeMap<BlockKey, BTreeMap<ItemKey, Vec<&PreferenceRecord>>> = BTreeMap::new();
    for r in records {
        if let Some(known) = &config.known_items {
            if !known.contains(&r.item_key) {
                errors.push(Diagnostic::error(format!("preference for unknown item {}", r.item_key)));
                continue;
            }
        }
        blocks
            .entry((r.baseline_model.clone(), r.variant_model.clone()))
            .or_default()
            .entry(r.item_key.clone())
            .or_default()
            .push(r);
    }

    let mut out = Vec::new();
    for ((baseline_model, variant_model), items) in &blocks {
        let mut block = PreferenceBlock {
            baseline_model: baseline_model.clone(),
            variant_model: variant_model.clone(),
            items: items.len(),
            annotations: 0,
            baseline: SideTally::default(),
            variant: SideTally::default(),
            none: 0,
            both: 0,
            chi_square: None,
            majority_agreement: 0.0,
            feedback_responses: 0,
        };
        let mut labels = Vec::with_capacity(items.len());
        for (key, recs) in items {
            let mut annotators = BTreeSet::new();
            for r in recs {
                if !annotators.insert(r.annotator_id.as_str()) {
                    errors.push(Diagnostic::error(format!(
                        "{key} ({baseline_model} vs {variant_model}): annotator {} exceeds the per-item quota of one preference",
                        r.annotator_id
                    )));
                }
            }
            if let Some(limit) = config.annotators_per_item {
                if annotators.len() > limit {
                    errors.push(Diagnostic::error(format!(
                        "{key} ({baseline_model} vs {variant_model}): {} annotators exceed the quota of {limit}",
                        annotators.len()
                    )));
                }
            }
            let first = recs[0];
            if recs.iter().any(|r| {
                r.baseline_faithful != first.baseline_faithful || r.variant_faithful != first.variant_faithful
            }) {
                errors.push(Diagnostic::error(format!(
                    "{key} ({baseline_model} vs {variant_model}): inconsistent faithfulness labels"
                )));
            }
            for r in recs {
                block.annotations += 1;
                match r.choice {
                    PreferenceChoice::Baseline => block.baseline.add(r.baseline_faithful),
                    PreferenceChoice::Variant => block.variant.add(r.variant_faithful),
                    PreferenceChoice::Both => {
                        block.both += 1;
                        block.baseline.add(r.baseline_faithful);
                        block.variant.add(r.variant_faithful);
                    }
                    PreferenceChoice::None => block.none += 1,
                }
                if r.feedback.as_deref().is_some_and(|f| !f.trim().is_empty()) {
                    block.feedback_responses += 1;
                }
            }
            labels.push(recs.iter().map(|r| r.choice).collect::<Vec<_>>());
        }
        block.majority_agreement = majority_agreement(&labels);
        if block.variant.selected + block.baseline.selected > 0 {
            block.chi_square = Some(chi_square_uniform(&[block.variant.selected, block.baseline.selected])?);
        }
        out.push(block);
    }
    if errors.has_errors() {
        return Err(HumanEvalError::Invalid(errors));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Trust

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phenomenon {
    LexicalAlignment,
    Pronouns,
    Structure,
}

impl Phenomenon {
    /// Display names of the option with and without the phenomenon.
    pub fn option_labels(self) -> (&'static str, &'static str) {
        match self {
            Phenomenon::LexicalAlignment => ("High Lexical Alignment", "Low Lexical Alignment"),
            Phenomenon::Pronouns => ("Pronouns", "No Pronouns"),
            Phenomenon::Structure => ("Short answer", "Fragment"),
        }
    }
}

impl fmt::Display for Phenomenon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phenomenon::LexicalAlignment => "Lexical Alignment",
            Phenomenon::Pronouns => "Pronouns",
            Phenomenon::Structure => "Structure",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrustChoice {
    OptionWith,
    OptionWithout,
    CantDecide,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrustRecord {
    pub pair_id: String,
    pub annotator_id: String,
    pub phenomenon: Phenomenon,
    pub choice: TrustChoice,
}

/// What the trust chi-square compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrustTest {
    /// The two substantive options against an even split of their total.
    #[default]
    Substantive,
    /// All three choices against an even three-way split.
    AllChoices,
}

#[derive(Debug, Clone)]
pub struct TrustConfig {
    pub expected_pairs: usize,
    pub annotations_per_pair: usize,
    /// Pairs that must have annotations, per phenomenon.
    pub declared_pairs: Option<Vec<(Phenomenon, String)>>,
    pub test: TrustTest,
}

impl Default for TrustConfig {
    fn default() -> Self {
        Self {
            expected_pairs: 15,
            annotations_per_pair: 20,
            declared_pairs: None,
            test: TrustTest::Substantive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustBlock {
    pub phenomenon: Phenomenon,
    pub pairs: usize,
    pub annotations: u64,
    pub with: u64,
    pub without: u64,
    pub cant_decide: u64,
    pub chi_square: Option<ChiSquareResult>,
    pub majority_agreement: f64,
}

impl TrustBlock {
    pub fn with_pct(&self) -> f64 {
        pct(self.with, self.annotations)
    }

    pub fn without_pct(&self) -> f64 {
        pct(self.without, self.annotations)
    }

    pub fn cant_decide_pct(&self) -> f64 {
        pct(self.cant_decide, self.annotations)
    }

    /// Whether the more trusted option won significantly; `Some(true)` for
    /// the option with the phenomenon.
    pub fn significant_winner(&self) -> Option<bool> {
        if !self.chi_square?.significant_at_05 || self.with == self.without {
            return None;
        }
        Some(self.with > self.without)
    }
}

pub fn aggregate_trust(
    records: &[TrustRecord],
    config: &TrustConfig,
) -> Result<(Vec<TrustBlock>, Diagnostics), HumanEvalError> {
    let mut diags = Diagnostics::new();
    let mut errors = Diagnostics::new();
    let mut by_pair: BTreeMap<Phenomenon, BTreeMap<&str, Vec<&TrustRecord>>> = BTreeMap::new();
    for r in records {
        by_pair
            .entry(r.phenomenon)
            .or_default()
            .entry(r.pair_id.as_str())
            .or_default()
            .push(r);
    }
    if let Some(declared) = &config.declared_pairs {
        for (ph, pair) in declared {
            let present = by_pair.get(ph).is_some_and(|m| m.contains_key(pair.as_str()));
            if !present {
                errors.push(Diagnostic::error(format!("{ph} pair {pair} has zero annotations")));
            }
        }
    }
    let mut out = Vec::new();
    for (ph, pairs) in &by_pair {
        if pairs.len() != config.expected_pairs {
            diags.push(Diagnostic::warning(format!(
                "{ph}: {} pairs, expected {}",
                pairs.len(),
                config.expected_pairs
            )));
        }
        let mut block = TrustBlock {
            phenomenon: *ph,
            pairs: pairs.len(),
            annotations: 0,
            with: 0,
            without: 0,
            cant_decide: 0,
            chi_square: None,
            majority_agreement: 0.0,
        };
        let mut labels = Vec::new();
        for (pair, recs) in pairs {
            let mut annotators = BTreeSet::new();
            for r in recs {
                if !annotators.insert(r.annotator_id.as_str()) {
                    errors.push(Diagnostic::error(format!(
                        "{ph} pair {pair}: annotator {} answered twice",
                        r.annotator_id
                    )));
                }
                block.annotations += 1;
                match r.choice {
                    TrustChoice::OptionWith => block.with += 1,
                    TrustChoice::OptionWithout => block.without += 1,
                    TrustChoice::CantDecide => block.cant_decide += 1,
                }
            }
            if recs.len() != config.annotations_per_pair {
                diags.push(Diagnostic::warning(format!(
                    "{ph} pair {pair}: {} annotations, expected {}",
                    recs.len(),
                    config.annotations_per_pair
                )));
            }
            labels.push(recs.iter().map(|r| r.choice).collect::<Vec<_>>());
        }
        block.majority_agreement = majority_agreement(&labels);
        block.chi_square = match config.test {
            TrustTest::Substantive if block.with + block.without > 0 => {
                Some(chi_square_uniform(&[block.with, block.without])?)
            }
            TrustTest::AllChoices if block.annotations > 0 => {
                Some(chi_square_uniform(&[block.with, block.without, block.cant_decide])?)
            }
            _ => None,
        };
        out.push(block);
    }
    if errors.has_errors() {
        return Err(HumanEvalError::Invalid(errors));
    }
    Ok((out, diags))
}
