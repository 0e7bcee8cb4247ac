mod common;

use std::fs;
use std::process::{Command, Output};

use common::fixture;

fn groundeval(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_groundeval"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(rel: &str) -> String {
    fixture(rel).to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn phenomena_row_for_named_model() {
    let o = groundeval(&[
        "phenomena",
        "--corpus", &path("phenomena/dialogues.jsonl"),
        "--parses", &path("phenomena/parses"),
        "--responses", &path("phenomena/responses.fixture.jsonl"),
        "--model", "DPR+FiD",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("| Models | Length (µ) | Frag | Short | Long | P | R | F1 | Pron (%) |"));
    // 105/26 tokens on average; 10, 12 and 4 of 26 items per class
    assert!(out.contains("| DPR+FiD | 4.0 | 38.5 | 46.2 | 15.4 |"), "{out}");
    assert!(out.trim_end().ends_with("| 38.5 |"), "{out}");
}

#[test]
fn missing_corpus_exits_2() {
    let o = groundeval(&["phenomena", "--responses", "r.jsonl"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("--corpus") && err.contains("Usage"), "{err}");
}

#[test]
fn unknown_flag_exits_2() {
    let o = groundeval(&["score", "--corpus", "c", "--responses", "r", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_exits_0_for_every_subcommand() {
    for sub in ["phenomena", "score", "judge", "prefs", "trust", "report"] {
        let o = groundeval(&[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0), "{sub}");
    }
    assert_eq!(groundeval(&["--help"]).status.code(), Some(0));
}

#[test]
fn invalid_records_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("responses.bad.jsonl");
    fs::write(&bad, "{\"dialogue_id\":\"nope\",\"turn_index\":1,\"text\":\"x\"}\n").unwrap();
    let o = groundeval(&[
        "score",
        "--corpus", &path("corpus/dialogues.jsonl"),
        "--responses", bad.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("unknown item nope/1"), "{err}");
}

#[test]
fn score_writes_per_item_and_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let o = groundeval(&[
        "score",
        "--corpus", &path("corpus/dialogues.jsonl"),
        "--knowledge", &path("corpus/knowledge.jsonl"),
        "--references", &path("corpus/references.jsonl"),
        "--responses", &path("corpus/responses.alpha.jsonl"),
        "--responses", &path("corpus/responses.beta.jsonl"),
        "--format", "tsv",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let rows = fs::read_to_string(dir.path().join("scores.alpha.jsonl")).unwrap();
    assert_eq!(rows.lines().count(), 6);
    let first: serde_json::Value = serde_json::from_str(rows.lines().next().unwrap()).unwrap();
    assert_eq!(first["dialogue_id"], "c1");
    assert!(first["k_f1_pp"]["f1"].is_number());
    let tsv = fs::read_to_string(dir.path().join("score.summary.tsv")).unwrap();
    let lines: Vec<&str> = tsv.lines().collect();
    assert_eq!(lines[0], "Models\tF1\tEM\tBLEU\tROUGE\tK-F1\tK-F1++\tK-Δ");
    assert!(lines[1].starts_with("alpha\t") && lines[2].starts_with("beta\t"));
    // BLEU carries two decimals, the other columns one
    let cells: Vec<&str> = lines[1].split('\t').collect();
    assert_eq!(cells[3].split('.').nth(1).map(str::len), Some(2));
    assert_eq!(cells[1].split('.').nth(1).map(str::len), Some(1));
    assert!(dir.path().join("score.summary.json").exists());
}

#[test]
fn settings_change_scores() {
    let base = [
        "score",
        "--corpus", &path("corpus/dialogues.jsonl"),
        "--knowledge", &path("corpus/knowledge.jsonl"),
        "--responses", &path("corpus/responses.beta.jsonl"),
    ];
    let default = stdout(&groundeval(&base));
    let mut keep = base.to_vec();
    keep.push("--no-article-strip");
    assert_ne!(stdout(&groundeval(&keep)), default);
}

#[test]
fn prefs_marks_significant_side() {
    let o = groundeval(&["prefs", "--preferences", &path("corpus/preferences.jsonl")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("### Pairwise preferences"));
    assert!(out.contains("| alpha |") && out.contains("| None |") && out.contains("| beta |"));
    assert!(out.contains("| Baseline vs | χ² | p | Agreement | Feedback |"));
}

#[test]
fn prefs_rejects_unknown_items_with_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("prefs.jsonl");
    fs::write(
        &p,
        "{\"dialogue_id\":\"zz\",\"turn_index\":1,\"annotator_id\":\"a\",\"choice\":\"none\",\"baseline_faithful\":true,\"variant_faithful\":true}\n",
    )
    .unwrap();
    let o = groundeval(&["prefs", "--preferences", p.to_str().unwrap(), "--corpus", &path("corpus/dialogues.jsonl")]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn trust_warns_on_unexpected_pair_counts() {
    let o = groundeval(&["trust", "--trust", &path("corpus/trust.jsonl")]);
    assert!(o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("3 pairs, expected 15"), "{err}");
    let out = stdout(&o);
    assert!(out.contains("| High Lexical Alignment |"));
}

#[test]
fn report_merges_saved_summaries_as_tsv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for m in ["alpha", "beta"] {
        let sub = format!("{out}/{m}");
        let o = groundeval(&[
            "score",
            "--corpus", &path("corpus/dialogues.jsonl"),
            "--responses", &path(&format!("corpus/responses.{m}.jsonl")),
            "--out", &sub,
        ]);
        assert!(o.status.success());
    }
    let o = groundeval(&[
        "report", "--format", "tsv",
        &format!("{out}/alpha/score.summary.json"),
        &format!("{out}/beta/score.summary.json"),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3, "{text}");
    assert!(lines[0].starts_with("Models\t"));
    assert!(lines[1].starts_with("alpha\t") && lines[2].starts_with("beta\t"));
}

#[test]
fn model_list_must_match_responses() {
    let o = groundeval(&[
        "score",
        "--corpus", &path("corpus/dialogues.jsonl"),
        "--responses", &path("corpus/responses.alpha.jsonl"),
        "--model", "a", "--model", "b",
    ]);
    assert_eq!(o.status.code(), Some(1));
}
