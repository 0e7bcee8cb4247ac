//! Library numerics against the oracles in `common` and against statrs.

mod common;

use common::*;
use groundeval::humaneval::{chi_square_gof, chi_square_sf, regularized_gamma_q};
use groundeval::metrics::{corpus_bleu, item_bleu_stats, BleuStats};
use groundeval::NormalizeOptions;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn chi_square_sf_agrees_with_statrs() {
    for df in 1..=30 {
        let dist = ChiSquared::new(df as f64).unwrap();
        for step in 0..=400 {
            let x = step as f64 * 0.5;
            let ours = chi_square_sf(x, df);
            let theirs = dist.sf(x);
            assert!((ours - theirs).abs() < 1e-9, "df {df}, x {x}: {ours} vs {theirs}");
        }
    }
}

#[test]
fn gamma_q_agrees_with_statrs_for_fractional_shapes() {
    for a in [0.1, 0.5, 1.3, 2.7, 7.5, 40.0] {
        for x in [1e-3, 0.2, 1.0, 3.0, 10.0, 60.0] {
            let ours = regularized_gamma_q(a, x);
            let theirs = statrs::function::gamma::gamma_ur(a, x);
            assert!((ours - theirs).abs() < 1e-9, "a {a}, x {x}: {ours} vs {theirs}");
        }
    }
}

#[test]
fn series_oracle_closed_forms() {
    // df 2 is exp(-x/2); df 1 at 3.841459 is the familiar 0.05 cut-off
    assert!((oracle_chi_square_sf(3.0, 2) - (-1.5f64).exp()).abs() < 1e-15);
    assert!((oracle_chi_square_sf(3.841_458_820_694_124, 1) - 0.05).abs() < 1e-12);
}

#[test]
fn goodness_of_fit_statistic() {
    let r = chi_square_gof(&[883.0, 417.0], &[650.0, 650.0]).unwrap();
    let (stat, p) = oracle_chi_square_uniform(&[883.0, 417.0]);
    assert!((r.statistic - stat).abs() < 1e-9);
    assert!((r.p_value - p).abs() < 1e-12);
    assert_eq!(r.df, 1);
}

#[test]
fn bleu_stats_merge_is_order_free() {
    let items = [
        ("the cat sat on the mat", vec!["a cat sat on the mat"]),
        ("one two three four five", vec!["one two three four", "one two three four five six"]),
        ("x y z w", vec!["x y z w"]),
    ];
    let stats: Vec<BleuStats> = items
        .iter()
        .map(|(c, r)| item_bleu_stats(c, r, NormalizeOptions::default()))
        .collect();
    let mut fwd = BleuStats::default();
    for s in &stats {
        fwd.merge(s);
    }
    let mut rev = BleuStats::default();
    for s in stats.iter().rev() {
        rev.merge(s);
    }
    assert_eq!(fwd, rev);
    let cands: Vec<&str> = items.iter().map(|(c, _)| *c).collect();
    let refs: Vec<Vec<&str>> = items.iter().map(|(_, r)| r.clone()).collect();
    let lib = corpus_bleu(&cands, &refs).unwrap();
    assert!((lib - oracle_bleu(&cands, &refs)).abs() < 1e-9);
    assert!((fwd.score() - lib).abs() < 1e-12);
}

#[test]
fn bleu_without_four_grams_is_zero() {
    assert_eq!(corpus_bleu(&["a b c"], &[vec!["a b c"]]).unwrap(), 0.0);
    assert_eq!(oracle_bleu(&["x y z"], &[vec!["x y z"]]), 0.0);
}

#[test]
fn subset_sum_helper_hits_targets() {
    let pick = subset_with_sum(&[3, 5, 2, 7, 1], 10).unwrap();
    let total: u64 = [3, 5, 2, 7, 1].iter().zip(&pick).filter(|(_, p)| **p).map(|(w, _)| w).sum();
    assert_eq!(total, 10);
    assert!(subset_with_sum(&[2, 4], 3).is_none());
}
