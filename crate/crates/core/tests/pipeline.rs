//! End-to-end library use on the fixture corpora.

mod common;

use common::fixture;
use groundeval::annotations::ParseIndex;
use groundeval::humaneval::{aggregate_judgments, aggregate_trust, read_records, JudgmentRecord, TrustConfig, TrustRecord};
use groundeval::metrics::{score_model, MetricConfig};
use groundeval::phenomena::{profile_model, Aggregation, PhenomenaConfig};
use groundeval::{load_corpus, load_responses, CorpusPaths, ItemKey};
use std::fs::File;
use std::io::BufReader;

fn corpus() -> groundeval::Corpus {
    let loaded = load_corpus(&CorpusPaths {
        dialogues: fixture("corpus/dialogues.jsonl"),
        knowledge: Some(fixture("corpus/knowledge.jsonl")),
        references: Some(fixture("corpus/references.jsonl")),
    })
    .unwrap();
    assert!(loaded.diagnostics.is_empty(), "{}", loaded.diagnostics);
    loaded.value
}

#[test]
fn fixture_corpus_shape() {
    let c = corpus();
    assert_eq!(c.dialogue_count(), 3);
    assert_eq!(c.item_count(), 6);
    assert_eq!(c.knowledge_count(), 6);
    let key = ItemKey::new("c1", 1);
    assert_eq!(c.question(&key), Some("Who wrote the play Hamlet?"));
    assert_eq!(c.references(&key).unwrap().len(), 2);
}

#[test]
fn scores_are_bounded_and_exact_match_counted() {
    let c = corpus();
    let set = load_responses(&fixture("corpus/responses.alpha.jsonl"), "alpha", &c).unwrap().value;
    let scores = score_model(&set, &c, &MetricConfig::default()).unwrap();
    let s = &scores.summary;
    assert_eq!(s.items, 6);
    assert_eq!(s.reference_items, 6);
    assert_eq!(s.knowledge_items, 6);
    // c2/3 repeats the reference verbatim
    assert!((s.exact_match.unwrap() - 100.0 / 6.0).abs() < 1e-9);
    for v in [s.token_f1, s.rouge_l, s.k_f1, s.k_f1_pp, s.bleu] {
        let v = v.unwrap();
        assert!((0.0..=100.0).contains(&v));
    }
    assert!(s.k_f1.unwrap() >= s.k_f1_pp.unwrap());
    assert!(scores.diagnostics.is_empty());
}

#[test]
fn phenomena_without_parses_reports_alignment_only() {
    let c = corpus();
    let set = load_responses(&fixture("corpus/responses.beta.jsonl"), "beta", &c).unwrap().value;
    let report = profile_model(&set, &c, None, &PhenomenaConfig::default()).unwrap();
    assert_eq!(report.summary.structure, None);
    assert_eq!(report.summary.pronoun_pct, None);
    assert_eq!(report.profiles.len(), 6);
    assert!(report.summary.alignment_f1 > 0.0);
}

#[test]
fn micro_and_macro_alignment_differ_on_uneven_items() {
    let c = load_corpus(&CorpusPaths::new(fixture("phenomena/dialogues.jsonl"))).unwrap().value;
    let set = load_responses(&fixture("phenomena/responses.fixture.jsonl"), "m", &c).unwrap().value;
    let (index, _) = ParseIndex::load_dir(&fixture("phenomena/parses")).unwrap();
    let macro_ = profile_model(&set, &c, Some(&index), &PhenomenaConfig::default()).unwrap();
    let micro = profile_model(
        &set,
        &c,
        Some(&index),
        &PhenomenaConfig {
            aggregation: Aggregation::Micro,
            ..PhenomenaConfig::default()
        },
    )
    .unwrap();
    assert_ne!(macro_.summary.alignment_recall, micro.summary.alignment_recall);
    assert_eq!(macro_.summary.structure, micro.summary.structure);
}

#[test]
fn judgment_fixture_percentages() {
    let recs: Vec<JudgmentRecord> =
        read_records(BufReader::new(File::open(fixture("corpus/judgments.jsonl")).unwrap())).unwrap();
    let (summaries, diags) = aggregate_judgments(&recs).unwrap();
    assert!(diags.is_empty());
    let alpha = summaries.iter().find(|s| s.model_name == "alpha").unwrap();
    assert_eq!((alpha.plausible_pct, alpha.grounded_pct, alpha.faithful_pct), (100.0, 100.0, 75.0));
    let beta = summaries.iter().find(|s| s.model_name == "beta").unwrap();
    assert_eq!((beta.plausible_pct, beta.grounded_pct, beta.faithful_pct), (75.0, 25.0, 0.0));
}

#[test]
fn trust_fixture_reconstruction() {
    let recs: Vec<TrustRecord> =
        read_records(BufReader::new(File::open(fixture("corpus/trust.jsonl")).unwrap())).unwrap();
    let config = TrustConfig {
        expected_pairs: 3,
        annotations_per_pair: 4,
        ..TrustConfig::default()
    };
    let (blocks, diags) = aggregate_trust(&recs, &config).unwrap();
    assert!(diags.is_empty(), "{diags}");
    assert_eq!(blocks.len(), 3);
    for b in &blocks {
        assert_eq!(b.annotations, 12);
        assert_eq!(b.with + b.without + b.cant_decide, 12);
    }
}
