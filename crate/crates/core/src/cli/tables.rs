//! Builders for the summary tables printed by each subcommand.

use crate::humaneval::{ChiSquareResult, JudgmentSummary, PreferenceBlock, Side, TrustBlock};
use crate::metrics::CorpusScores;
use crate::phenomena::PhenomenaSummary;
use crate::report::{Cell, ReportTable};

pub const PHENOMENA_TITLE: &str = "Linguistic phenomena of responses";
pub const SCORES_TITLE: &str = "Automatic metrics";
pub const JUDGMENTS_TITLE: &str = "Faithfulness judgments";
pub const PREFERENCES_TITLE: &str = "Pairwise preferences";
pub const PREFERENCE_STATS_TITLE: &str = "Preference agreement and significance";
pub const TRUST_TITLE: &str = "Trust by linguistic phenomenon";
pub const TRUST_STATS_TITLE: &str = "Trust agreement and significance";

pub fn phenomena_table(rows: &[PhenomenaSummary]) -> ReportTable {
    let mut t = ReportTable::new(
        PHENOMENA_TITLE,
        ["Models", "Length (µ)", "Frag", "Short", "Long", "P", "R", "F1", "Pron (%)"],
    );
    for s in rows {
        let shares = s.structure;
        t.push_row(vec![
            Cell::text(&s.model_name),
            Cell::number(s.mean_length, 1),
            Cell::opt_number(shares.map(|x| x.fragment), 1),
            Cell::opt_number(shares.map(|x| x.short), 1),
            Cell::opt_number(shares.map(|x| x.long), 1),
            Cell::pct(100.0 * s.alignment_precision),
            Cell::pct(100.0 * s.alignment_recall),
            Cell::pct(100.0 * s.alignment_f1),
            Cell::opt_number(s.pronoun_pct, 1),
        ]);
    }
    t
}

pub fn scores_table(rows: &[CorpusScores]) -> ReportTable {
    let mut t = ReportTable::new(
        SCORES_TITLE,
        ["Models", "F1", "EM", "BLEU", "ROUGE", "K-F1", "K-F1++", "K-Δ"],
    );
    for s in rows {
        t.push_row(vec![
            Cell::text(&s.model_name),
            Cell::opt_number(s.token_f1, 1),
            Cell::opt_number(s.exact_match, 1),
            Cell::opt_number(s.bleu, 2),
            Cell::opt_number(s.rouge_l, 1),
            Cell::opt_number(s.k_f1, 1),
            Cell::opt_number(s.k_f1_pp, 1),
            Cell::opt_number(s.knowledge_gap(), 1),
        ]);
    }
    t
}

pub fn judgments_table(rows: &[JudgmentSummary]) -> ReportTable {
    let mut t = ReportTable::new(JUDGMENTS_TITLE, ["Models", "Plaus.", "Ground.", "Faith."]);
    for s in rows {
        t.push_row(vec![
            Cell::text(&s.model_name),
            Cell::pct(s.plausible_pct),
            Cell::pct(s.grounded_pct),
            Cell::pct(s.faithful_pct),
        ]);
    }
    t
}

fn p_value_cell(chi: Option<ChiSquareResult>) -> (Cell, Cell) {
    match chi {
        Some(c) => (
            Cell::number(c.statistic, 2),
            Cell::text(format!("{:.3e}", c.p_value)).with_dagger(c.significant_at_05),
        ),
        None => (Cell::missing(), Cell::missing()),
    }
}

pub fn preferences_tables(blocks: &[PreferenceBlock]) -> Vec<ReportTable> {
    let mut t = ReportTable::new(
        PREFERENCES_TITLE,
        ["Model", "All (#)", "Faith. (#)", "Unfaith. (#)"],
    );
    let mut stats = ReportTable::new(
        PREFERENCE_STATS_TITLE,
        ["Baseline vs", "χ²", "p", "Agreement", "Feedback"],
    );
    for b in blocks {
        let winner = b.significant_side();
        let side_row = |name: &str, pct: f64, tally: crate::humaneval::SideTally, sig: bool| {
            vec![
                Cell::text(name),
                Cell::pct_count(pct, tally.selected).with_dagger(sig),
                Cell::pct_count(tally.faithful_pct(), tally.faithful),
                Cell::pct_count(tally.unfaithful_pct(), tally.unfaithful),
            ]
        };
        t.push_row(side_row(
            &b.baseline_model,
            b.baseline_pct(),
            b.baseline,
            winner == Some(Side::Baseline),
        ));
        t.push_row(vec![
            Cell::text("None"),
            Cell::pct_count(b.none_pct(), b.none),
            Cell::text("-"),
            Cell::text("-"),
        ]);
        t.push_row(side_row(
            &b.variant_model,
            b.variant_pct(),
            b.variant,
            winner == Some(Side::Variant),
        ));
        let (chi, p) = p_value_cell(b.chi_square);
        stats.push_row(vec![
            Cell::text(&b.variant_model),
            chi,
            p,
            Cell::pct_sign(b.majority_agreement, 1),
            Cell::number(b.feedback_responses as f64, 0),
        ]);
    }
    vec![t, stats]
}

pub fn trust_tables(blocks: &[TrustBlock]) -> Vec<ReportTable> {
    let mut t = ReportTable::new(TRUST_TITLE, ["Linguistic phenomena", "Trust"]);
    let mut stats = ReportTable::new(TRUST_STATS_TITLE, ["Phenomenon", "χ²", "p", "Agreement"]);
    for b in blocks {
        let (with_label, without_label) = b.phenomenon.option_labels();
        let winner = b.significant_winner();
        t.push_row(vec![
            Cell::text(with_label),
            Cell::pct_sign(b.with_pct(), 0).with_dagger(winner == Some(true)),
        ]);
        t.push_row(vec![Cell::text("None"), Cell::pct_sign(b.cant_decide_pct(), 0)]);
        t.push_row(vec![
            Cell::text(without_label),
            Cell::pct_sign(b.without_pct(), 0).with_dagger(winner == Some(false)),
        ]);
        let (chi, p) = p_value_cell(b.chi_square);
        stats.push_row(vec![
            Cell::text(b.phenomenon.to_string()),
            chi,
            p,
            Cell::pct_sign(b.majority_agreement, 1),
        ]);
    }
    vec![t, stats]
}
