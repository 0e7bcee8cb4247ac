//! Independent reference implementations and fixture builders shared by the
//! integration tests. Nothing here calls into the library's metric code.

#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use groundeval::humaneval::{Phenomenon, PreferenceChoice, PreferenceRecord, TrustChoice, TrustRecord};
use groundeval::ItemKey;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

// ---------------------------------------------------------------------------
// Token oracles

pub fn oracle_tokens(text: &str) -> Vec<String> {
    let lowered = text.to_lowercase();
    let mut cleaned = String::with_capacity(lowered.len());
    for c in lowered.chars() {
        if c.is_alphanumeric() || c.is_whitespace() {
            cleaned.push(c);
        }
    }
    cleaned
        .split_whitespace()
        .filter(|t| !matches!(*t, "a" | "an" | "the"))
        .map(str::to_owned)
        .collect()
}

/// Multiset intersection by pairing each token with an unused equal one.
pub fn brute_intersection(a: &[String], b: &[String]) -> usize {
    let mut used = vec![false; b.len()];
    let mut n = 0;
    for x in a {
        for (j, y) in b.iter().enumerate() {
            if !used[j] && x == y {
                used[j] = true;
                n += 1;
                break;
            }
        }
    }
    n
}

pub fn prf(overlap: usize, len_a: usize, len_b: usize) -> (f64, f64, f64) {
    if overlap == 0 || len_a == 0 || len_b == 0 {
        return (0.0, 0.0, 0.0);
    }
    let p = overlap as f64 / len_a as f64;
    let r = overlap as f64 / len_b as f64;
    (p, r, 2.0 * p * r / (p + r))
}

/// K-F1++ by explicit filtering: drop every response token whose type
/// occurs anywhere in the question, then intersect with the knowledge.
pub fn brute_kf1_pp(question: &str, response: &str, knowledge: &str) -> (usize, f64, f64, f64) {
    let q = oracle_tokens(question);
    let mut filtered = Vec::new();
    for t in oracle_tokens(response) {
        let mut in_question = false;
        for u in &q {
            if *u == t {
                in_question = true;
            }
        }
        if !in_question {
            filtered.push(t);
        }
    }
    let k = oracle_tokens(knowledge);
    let o = brute_intersection(&filtered, &k);
    let (p, r, f) = prf(o, filtered.len(), k.len());
    (o, p, r, f)
}

pub fn brute_kf1(response: &str, knowledge: &str) -> (usize, f64, f64, f64) {
    let r = oracle_tokens(response);
    let k = oracle_tokens(knowledge);
    let o = brute_intersection(&r, &k);
    let (p, rr, f) = prf(o, r.len(), k.len());
    (o, p, rr, f)
}

// ---------------------------------------------------------------------------
// BLEU oracle

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<Vec<String>, usize> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w.to_vec()).or_insert(0) += 1;
        }
    }
    m
}

/// Unsmoothed corpus BLEU-4 (0-100) with clipping against the maximum
/// count in any single reference and the closest reference length.
pub fn oracle_bleu(candidates: &[&str], references: &[Vec<&str>]) -> f64 {
    let mut matched = [0f64; 4];
    let mut total = [0f64; 4];
    let mut c_len = 0f64;
    let mut r_len = 0f64;
    for (cand, refs) in candidates.iter().zip(references) {
        let c = oracle_tokens(cand);
        let rs: Vec<Vec<String>> = refs.iter().map(|r| oracle_tokens(r)).collect();
        c_len += c.len() as f64;
        let mut best = rs[0].len();
        for r in &rs {
            let d = (r.len() as i64 - c.len() as i64).abs();
            let bd = (best as i64 - c.len() as i64).abs();
            if d < bd || (d == bd && r.len() < best) {
                best = r.len();
            }
        }
        r_len += best as f64;
        for n in 1..=4 {
            let cc = ngram_counts(&c, n);
            for (g, k) in &cc {
                let mut max_ref = 0;
                for r in &rs {
                    max_ref = max_ref.max(*ngram_counts(r, n).get(g).unwrap_or(&0));
                }
                matched[n - 1] += (*k).min(max_ref) as f64;
            }
            total[n - 1] += c.len().saturating_sub(n - 1) as f64;
        }
    }
    if (0..4).any(|i| matched[i] == 0.0 || total[i] == 0.0) {
        return 0.0;
    }
    let log_p: f64 = (0..4).map(|i| (matched[i] / total[i]).ln()).sum::<f64>() / 4.0;
    let bp = if c_len > r_len { 1.0 } else { (1.0 - r_len / c_len).exp() };
    100.0 * bp * log_p.exp()
}

// ---------------------------------------------------------------------------
// Chi-square oracle

/// erf from its all-positive series, erf(z) = 2/√π e^(-z²) Σ 2ⁿ z^(2n+1) / (2n+1)!!.
/// Absolute error stays near machine epsilon for every z used here.
pub fn oracle_erf(z: f64) -> f64 {
    let mut term = z;
    let mut sum = z;
    let mut n = 0.0;
    while term > sum * 1e-18 {
        n += 1.0;
        term *= 2.0 * z * z / (2.0 * n + 1.0);
        sum += term;
    }
    2.0 / std::f64::consts::PI.sqrt() * (-z * z).exp() * sum
}

/// Survival function from the terminating series of the chi-square
/// distribution: a Poisson tail for even df, erfc plus half-integer
/// terms for odd df.
pub fn oracle_chi_square_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let h = x / 2.0;
    if df.is_multiple_of(2) {
        let mut term = 1.0;
        let mut sum = 1.0;
        for i in 1..df / 2 {
            term *= h / i as f64;
            sum += term;
        }
        (-h).exp() * sum
    } else {
        let mut p = 1.0 - oracle_erf(h.sqrt());
        // term_i = h^(i-1/2) / Γ(i+1/2), built up from Γ(3/2) = √π/2
        let mut term = h.sqrt() / (std::f64::consts::PI.sqrt() / 2.0);
        for i in 1..=(df - 1) / 2 {
            if i > 1 {
                term *= h / (i as f64 - 0.5);
            }
            p += (-h).exp() * term;
        }
        p
    }
}

pub fn oracle_chi_square_uniform(counts: &[f64]) -> (f64, f64) {
    let e = counts.iter().sum::<f64>() / counts.len() as f64;
    let stat: f64 = counts.iter().map(|o| (o - e) * (o - e) / e).sum();
    (stat, oracle_chi_square_sf(stat, counts.len() - 1))
}

// ---------------------------------------------------------------------------
// Human-evaluation fixtures

pub struct PreferenceSpec {
    pub baseline: &'static str,
    pub variant: &'static str,
    pub baseline_selected: u64,
    pub variant_selected: u64,
    pub none: u64,
    pub baseline_faithful: u64,
    pub variant_faithful: u64,
}

impl PreferenceSpec {
    pub fn both(&self, annotations: u64) -> u64 {
        self.baseline_selected + self.variant_selected + self.none - annotations
    }
}

pub const TABLE4: [PreferenceSpec; 3] = [
    PreferenceSpec {
        baseline: "DPR+FiD",
        variant: "DPR+GPT-3",
        baseline_selected: 417,
        variant_selected: 883,
        none: 153,
        baseline_faithful: 354,
        variant_faithful: 459,
    },
    PreferenceSpec {
        baseline: "DPR+FiD",
        variant: "GPT-3",
        baseline_selected: 539,
        variant_selected: 559,
        none: 173,
        baseline_faithful: 451,
        variant_faithful: 186,
    },
    PreferenceSpec {
        baseline: "DPR+FiD",
        variant: "Human",
        baseline_selected: 578,
        variant_selected: 931,
        none: 109,
        baseline_faithful: 547,
        variant_faithful: 879,
    },
];

/// Picks a subset of `weights` summing to `target`, by dynamic programming.
pub fn subset_with_sum(weights: &[u64], target: u64) -> Option<Vec<bool>> {
    let t = target as usize;
    // reach[i][s]: some subset of the first i weights sums to s
    let mut reach = vec![vec![false; t + 1]; weights.len() + 1];
    reach[0][0] = true;
    for (i, &w) in weights.iter().enumerate() {
        for s in 0..=t {
            reach[i + 1][s] = reach[i][s] || (s >= w as usize && reach[i][s - w as usize]);
        }
    }
    if !reach[weights.len()][t] {
        return None;
    }
    let mut pick = vec![false; weights.len()];
    let mut s = t;
    for i in (0..weights.len()).rev() {
        if !reach[i][s] {
            pick[i] = true;
            s -= weights[i] as usize;
        }
    }
    Some(pick)
}

/// Preference records for one block: `items` items with `per_item`
/// annotators each, choices shuffled with a fixed seed and faithfulness
/// labels chosen so the per-side faithful counts hit the targets.
pub fn preference_block(spec: &PreferenceSpec, items: usize, per_item: usize, seed: u64) -> Vec<PreferenceRecord> {
    let annotations = (items * per_item) as u64;
    let both = spec.both(annotations);
    let mut choices = Vec::new();
    choices.extend(std::iter::repeat_n(PreferenceChoice::Both, both as usize));
    choices.extend(std::iter::repeat_n(PreferenceChoice::Baseline, (spec.baseline_selected - both) as usize));
    choices.extend(std::iter::repeat_n(PreferenceChoice::Variant, (spec.variant_selected - both) as usize));
    choices.extend(std::iter::repeat_n(PreferenceChoice::None, spec.none as usize));
    assert_eq!(choices.len() as u64, annotations);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    choices.shuffle(&mut rng);

    let per: Vec<&[PreferenceChoice]> = choices.chunks(per_item).collect();
    let count = |side: PreferenceChoice| -> Vec<u64> {
        per.iter()
            .map(|c| c.iter().filter(|&&x| x == side || x == PreferenceChoice::Both).count() as u64)
            .collect()
    };
    let b_faith = subset_with_sum(&count(PreferenceChoice::Baseline), spec.baseline_faithful)
        .expect("baseline faithful split reachable");
    let v_faith = subset_with_sum(&count(PreferenceChoice::Variant), spec.variant_faithful)
        .expect("variant faithful split reachable");

    let mut out = Vec::new();
    for (i, chunk) in per.iter().enumerate() {
        for (a, &choice) in chunk.iter().enumerate() {
            out.push(PreferenceRecord {
                item_key: ItemKey::new(format!("pref-{i:03}"), 1),
                annotator_id: format!("w{a}"),
                choice,
                baseline_faithful: b_faith[i],
                variant_faithful: v_faith[i],
                baseline_model: spec.baseline.to_owned(),
                variant_model: spec.variant.to_owned(),
                feedback: None,
            });
        }
    }
    out
}

pub fn table4_records(seed: u64) -> Vec<PreferenceRecord> {
    TABLE4
        .iter()
        .enumerate()
        .flat_map(|(i, spec)| preference_block(spec, 250, 5, seed + i as u64))
        .collect()
}

/// (phenomenon, with, cant_decide, without) counts over 300 annotations,
/// each rounding to the published percentages.
pub const TABLE5: [(Phenomenon, u64, u64, u64); 3] = [
    (Phenomenon::LexicalAlignment, 174, 30, 96),
    (Phenomenon::Pronouns, 94, 58, 148),
    (Phenomenon::Structure, 199, 22, 79),
];

pub fn table5_records(seed: u64) -> Vec<TrustRecord> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for &(ph, with, cd, without) in &TABLE5 {
        let mut choices = Vec::new();
        choices.extend(std::iter::repeat_n(TrustChoice::OptionWith, with as usize));
        choices.extend(std::iter::repeat_n(TrustChoice::CantDecide, cd as usize));
        choices.extend(std::iter::repeat_n(TrustChoice::OptionWithout, without as usize));
        choices.shuffle(&mut rng);
        for (p, chunk) in choices.chunks(20).enumerate() {
            for (a, &choice) in chunk.iter().enumerate() {
                out.push(TrustRecord {
                    pair_id: format!("pair-{p:02}"),
                    annotator_id: format!("t{a:02}"),
                    phenomenon: ph,
                    choice,
                });
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Synthetic K-F1++ items

pub struct KnowledgeItem {
    pub question: String,
    pub response: String,
    pub knowledge: String,
}

const VOCAB: [&str; 24] = [
    "the", "a", "an", "Paris", "capital", "france", "river", "Seine", "flows", "through", "city",
    "is", "of", "and", "tower", "Eiffel", "built", "1889", "who", "what", "wrote", "Hamlet",
    "play", "it",
];

fn sentence(rng: &mut ChaCha8Rng, min: usize, max: usize) -> String {
    use rand::Rng;
    let n = rng.random_range(min..=max);
    let mut words: Vec<String> = (0..n)
        .map(|_| VOCAB[rng.random_range(0..VOCAB.len())].to_owned())
        .collect();
    if n > 0 && rng.random_bool(0.3) {
        words[n - 1].push(if rng.random_bool(0.5) { '?' } else { '.' });
    }
    words.join(" ")
}

pub fn synthetic_knowledge_items(n: usize, seed: u64) -> Vec<KnowledgeItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| KnowledgeItem {
            question: sentence(&mut rng, 1, 6),
            response: sentence(&mut rng, 0, 10),
            knowledge: sentence(&mut rng, 1, 14),
        })
        .collect()
}
