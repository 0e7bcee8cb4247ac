//! Tokenization and normalization shared by every token-overlap computation.
//!
//! Normalization lowercases, drops punctuation, removes the articles
//! `a`/`an`/`the` (unless disabled) and splits on whitespace. Overlaps are
//! computed over bags (multisets) by default; set semantics are available
//! through [`OverlapMode::Set`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

const ARTICLES: [&str; 3] = ["a", "an", "the"];

/// Knobs controlling [`normalize_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizeOptions {
    pub strip_articles: bool,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        Self { strip_articles: true }
    }
}

/// Whether repeated tokens count once or once per occurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapMode {
    #[default]
    Multiset,
    Set,
}

/// Normalization plus overlap semantics, threaded through every metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TextConfig {
    pub normalize: NormalizeOptions,
    pub overlap: OverlapMode,
}

/// Anything that is neither alphanumeric nor whitespace is punctuation or a
/// symbol and gets removed.
fn is_dropped(c: char) -> bool {
    !(c.is_alphanumeric() || c.is_whitespace())
}

/// Normalizes with the default options (article stripping on).
pub fn normalize(text: &str) -> Vec<String> {
    normalize_with(text, NormalizeOptions::default())
}

pub fn normalize_with(text: &str, options: NormalizeOptions) -> Vec<String> {
    let cleaned: String = text
        .to_lowercase()
        .chars()
        .filter(|&c| !is_dropped(c))
        .collect();
    cleaned
        .split_whitespace()
        .filter(|tok| !(options.strip_articles && ARTICLES.contains(tok)))
        .map(str::to_owned)
        .collect()
}

/// Raw whitespace token count, before any normalization.
pub fn surface_length(text: &str) -> usize {
    text.split_whitespace().count()
}

/// A multiset of normalized tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenBag {
    counts: BTreeMap<String, usize>,
    source_length: usize,
}

impl TokenBag {
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut counts = BTreeMap::new();
        let mut source_length = 0;
        for tok in tokens {
            let tok = tok.into();
            if tok.is_empty() {
                continue;
            }
            source_length += 1;
            *counts.entry(tok).or_insert(0) += 1;
        }
        Self {
            counts,
            source_length,
        }
    }

    pub fn from_text(text: &str, options: NormalizeOptions) -> Self {
        Self::from_tokens(normalize_with(text, options))
    }

    /// Token count including repeats.
    pub fn len(&self) -> usize {
        self.source_length
    }

    pub fn is_empty(&self) -> bool {
        self.source_length == 0
    }

    /// Number of distinct token types.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, token: &str) -> usize {
        self.counts.get(token).copied().unwrap_or(0)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.counts.contains_key(token)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.counts.iter().map(|(k, &v)| (k.as_str(), v))
    }

    /// Collapses every count to one.
    pub fn to_set(&self) -> Self {
        Self::from_tokens(self.counts.keys().cloned())
    }

    /// Size of the multiset intersection.
    pub fn intersection_size(&self, other: &TokenBag) -> usize {
        let (small, large) = if self.distinct() <= other.distinct() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .counts
            .iter()
            .map(|(tok, &n)| n.min(large.count(tok)))
            .sum()
    }
}

/// Overlap counts and the derived precision/recall/F1.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Overlap {
    pub overlap: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Overlap {
    pub const ZERO: Overlap = Overlap {
        overlap: 0,
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };

    /// Builds from raw counts; any zero denominator yields zeros.
    pub fn from_counts(overlap: usize, len_a: usize, len_b: usize) -> Self {
        if overlap == 0 || len_a == 0 || len_b == 0 {
            return Overlap {
                overlap,
                ..Overlap::ZERO
            };
        }
        let precision = overlap as f64 / len_a as f64;
        let recall = overlap as f64 / len_b as f64;
        Overlap {
            overlap,
            precision,
            recall,
            f1: harmonic_mean(precision, recall),
        }
    }
}

pub(crate) fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Multiset overlap of `a` against `b`: precision is relative to `a`,
/// recall to `b`.
pub fn bag_overlap(a: &TokenBag, b: &TokenBag) -> Overlap {
    Overlap::from_counts(a.intersection_size(b), a.len(), b.len())
}

pub fn overlap_with_mode(a: &TokenBag, b: &TokenBag, mode: OverlapMode) -> Overlap {
    match mode {
        OverlapMode::Multiset => bag_overlap(a, b),
        OverlapMode::Set => bag_overlap(&a.to_set(), &b.to_set()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bag(words: &[&str]) -> TokenBag {
        TokenBag::from_tokens(words.iter().copied())
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize("The Ural River!"), vec!["ural", "river"]);
        assert!(normalize("").is_empty());
        assert!(normalize("A an THE.").is_empty());
    }

    #[test]
    fn article_switch() {
        let opts = NormalizeOptions {
            strip_articles: false,
        };
        assert_eq!(normalize_with("The river", opts), vec!["the", "river"]);
    }

    #[test]
    fn punctuation_inside_words_is_removed() {
        assert_eq!(normalize("don't stop, U.S.A."), vec!["dont", "stop", "usa"]);
        assert_eq!(normalize("« quoted » — dash"), vec!["quoted", "dash"]);
    }

    #[test]
    fn overlap_identity_and_disjoint() {
        let a = bag(&["x", "y", "y"]);
        let o = bag_overlap(&a, &a);
        assert_eq!(o.overlap, 3);
        assert_eq!((o.precision, o.recall, o.f1), (1.0, 1.0, 1.0));
        assert_eq!(bag_overlap(&a, &bag(&["z"])), Overlap::ZERO);
        assert_eq!(bag_overlap(&a, &TokenBag::default()), Overlap::ZERO);
    }

    #[test]
    fn overlap_hand_example() {
        let a = bag(&["shakespeare", "wrote", "hamlet"]);
        let b = bag(&["who", "wrote", "hamlet"]);
        let o = bag_overlap(&a, &b);
        assert_eq!(o.overlap, 2);
        assert!((o.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((o.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((o.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn set_mode_collapses_repeats() {
        let a = bag(&["river", "river", "north"]);
        let b = bag(&["river"]);
        let multi = overlap_with_mode(&a, &b, OverlapMode::Multiset);
        let set = overlap_with_mode(&a, &b, OverlapMode::Set);
        assert!((multi.precision - 1.0 / 3.0).abs() < 1e-12);
        assert!((set.precision - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_tokens_are_ignored() {
        let b = TokenBag::from_tokens(["", "a", ""]);
        assert_eq!(b.len(), 1);
    }
}
