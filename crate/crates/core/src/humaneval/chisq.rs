//! Chi-square goodness of fit with a self-contained upper incomplete gamma.

use serde::{Deserialize, Serialize};
use thiserror::Error;

const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;
const MAX_ITER: usize = 100_000;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// `exp(-x) x^a / Γ(a)`, the common prefactor of both expansions.
fn prefactor(a: f64, x: f64) -> f64 {
    (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Lower regularized gamma P(a, x) by its power series; good for x < a + 1.
fn lower_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * prefactor(a, x)
}

/// Upper regularized gamma Q(a, x) by continued fraction (modified Lentz);
/// good for x >= a + 1.
fn upper_continued_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    prefactor(a, x) * h
}

/// Regularized upper incomplete gamma Q(a, x) for `a > 0`, `x >= 0`.
pub fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0, "shape must be positive");
    assert!(x >= 0.0, "x must be non-negative");
    if x == 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        (1.0 - lower_series(a, x)).clamp(0.0, 1.0)
    } else {
        upper_continued_fraction(a, x).clamp(0.0, 1.0)
    }
}

/// Survival function of the chi-square distribution.
pub fn chi_square_sf(statistic: f64, df: usize) -> f64 {
    regularized_gamma_q(df as f64 / 2.0, statistic / 2.0)
}

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub significant_at_05: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChiSquareError {
    #[error("{observed} observed cells but {expected} expected cells")]
    LengthMismatch { observed: usize, expected: usize },
    #[error("need at least two categories, got {0}")]
    TooFewCategories(usize),
    #[error("expected count in cell {cell} is {value}, must be > 0")]
    NonPositiveExpected { cell: usize, value: f64 },
    #[error("observed count in cell {cell} is {value}, must be >= 0")]
    NegativeObserved { cell: usize, value: f64 },
}

/// Pearson statistic Σ(O−E)²/E with k−1 degrees of freedom.
pub fn chi_square_gof(observed: &[f64], expected: &[f64]) -> Result<ChiSquareResult, ChiSquareError> {
    if observed.len() != expected.len() {
        return Err(ChiSquareError::LengthMismatch {
            observed: observed.len(),
            expected: expected.len(),
        });
    }
    if observed.len() < 2 {
        return Err(ChiSquareError::TooFewCategories(observed.len()));
    }
    if let Some((cell, &value)) = expected.iter().enumerate().find(|(_, &e)| e.is_nan() || e <= 0.0) {
        return Err(ChiSquareError::NonPositiveExpected { cell, value });
    }
    if let Some((cell, &value)) = observed.iter().enumerate().find(|(_, &o)| o.is_nan() || o < 0.0) {
        return Err(ChiSquareError::NegativeObserved { cell, value });
    }
    let statistic: f64 = observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let df = observed.len() - 1;
    let p_value = chi_square_sf(statistic, df);
    Ok(ChiSquareResult {
        statistic,
        df,
        p_value,
        significant_at_05: p_value < SIGNIFICANCE_LEVEL,
    })
}

/// Goodness of fit against a uniform split of the observed total.
pub fn chi_square_uniform(counts: &[u64]) -> Result<ChiSquareResult, ChiSquareError> {
    let total: u64 = counts.iter().sum();
    let e = total as f64 / counts.len().max(1) as f64;
    let observed: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    chi_square_gof(&observed, &vec![e; counts.len()])
}
