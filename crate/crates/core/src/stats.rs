//! Nonparametric comparison of methods: Wilcoxon signed-rank test, Holm
//! step-down procedure and average ranks.

use alloc::vec;
use alloc::vec::Vec;

use crate::matrix::Matrix;
use crate::metrics::midranks;
use crate::{Error, Result};

/// Largest number of nonzero differences for which the null distribution is
/// enumerated exactly; above it the normal approximation is used.
pub const EXACT_LIMIT: usize = 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PMethod {
    Exact,
    NormalApprox,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestResult {
    /// `min(W+, W-)`.
    pub statistic: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    pub significant: bool,
    /// Number of nonzero differences actually ranked.
    pub n: usize,
    pub method: PMethod,
}

/// Paired scores of two methods.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedSample {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl PairedSample {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::shape("PairedSample", a.len(), b.len()));
        }
        if a.is_empty() {
            return Err(Error::param("paired sample must not be empty"));
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::param("paired sample values must be finite"));
        }
        Ok(PairedSample { a, b })
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// `a - b` with exact zeros removed.
    pub fn nonzero_differences(&self) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(x, y)| x - y)
            .filter(|&d| d != 0.0)
            .collect()
    }
}

/// Signed ranks of the nonzero differences: midranks of `|d|`, doubled so
/// that every value is an integer.
fn doubled_ranks(diffs: &[f64]) -> Vec<u64> {
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    midranks(&abs).into_iter().map(|r| (2.0 * r) as u64).collect()
}

/// Wilcoxon paired signed-rank test (two-sided). Zero differences are
/// dropped; ties among `|d|` get midranks.
pub fn wilcoxon_signed_rank(sample: &PairedSample, alpha: f64) -> Result<TestResult> {
    let diffs = sample.nonzero_differences();
    if diffs.is_empty() {
        return Err(Error::Degenerate("all paired differences are zero".into()));
    }
    let n = diffs.len();
    let ranks = doubled_ranks(&diffs);
    let total: u64 = ranks.iter().sum();
    let w_plus: u64 = ranks.iter().zip(&diffs).filter(|(_, &d)| d > 0.0).map(|(r, _)| r).sum();
    let w2 = w_plus.min(total - w_plus);

    let (p_value, method) = if n <= EXACT_LIMIT {
        (exact_p(&ranks, w2), PMethod::Exact)
    } else {
        (normal_p(&diffs, w2 as f64 / 2.0), PMethod::NormalApprox)
    };
    let p_value = p_value.clamp(0.0, 1.0);
    Ok(TestResult {
        statistic: w2 as f64 / 2.0,
        p_value,
        significant: p_value <= alpha,
        n,
        method,
    })
}

/// Fraction of the `2^n` sign assignments whose `min(W+, W-)` (in doubled
/// units) is at most `w2`, counted with a subset-sum table.
fn exact_p(ranks: &[u64], w2: u64) -> f64 {
    let total: u64 = ranks.iter().sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let hits: u64 = counts
        .iter()
        .enumerate()
        .filter(|&(s, _)| (s as u64).min(total - s as u64) <= w2)
        .map(|(_, &c)| c)
        .sum();
    hits as f64 / libm::ldexp(1.0, ranks.len() as i32)
}

/// Normal approximation with the tie correction of the variance.
fn normal_p(diffs: &[f64], w: f64) -> f64 {
    let n = diffs.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < abs.len() {
        let mut j = i + 1;
        while j < abs.len() && abs[j] == abs[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = (w - mean) / libm::sqrt(var);
    libm::erfc(z.abs() / core::f64::consts::SQRT_2)
}

/// Holm step-down: with p-values sorted ascending, reject while
/// `p_(i) ≤ α / (m − i + 1)`. Results are in the input order.
pub fn holm_posthoc(p_values: &[f64], alpha: f64) -> Result<Vec<bool>> {
    if p_values.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::param("p-values must lie in [0, 1]"));
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut reject = vec![false; m];
    for (step, &idx) in order.iter().enumerate() {
        if p_values[idx] <= alpha / (m - step) as f64 {
            reject[idx] = true;
        } else {
            break;
        }
    }
    Ok(reject)
}

/// Holm-adjusted p-values, `max_{j≤i} min(1, (m − j + 1)·p_(j))`, in input order.
pub fn holm_adjusted(p_values: &[f64]) -> Vec<f64> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut adjusted = vec![0.0; m];
    let mut running: f64 = 0.0;
    for (step, &idx) in order.iter().enumerate() {
        running = running.max(((m - step) as f64 * p_values[idx]).min(1.0));
        adjusted[idx] = running;
    }
    adjusted
}

/// Mean rank of each method (rows of `scores`) across datasets (columns),
/// rank 1 being best, ties sharing midranks.
pub fn average_rank(scores: &Matrix, higher_is_better: bool) -> Result<Vec<f64>> {
    let (methods, datasets) = scores.shape();
    if methods == 0 || datasets == 0 {
        return Err(Error::param("average rank needs at least one method and one dataset"));
    }
    let mut sums = vec![0.0; methods];
    for d in 0..datasets {
        let column: Vec<f64> = (0..methods)
            .map(|m| {
                if higher_is_better {
                    -scores.get(m, d)
                } else {
                    scores.get(m, d)
                }
            })
            .collect();
        for (s, r) in sums.iter_mut().zip(midranks(&column)) {
            *s += r;
        }
    }
    Ok(sums.into_iter().map(|s| s / datasets as f64).collect())
}
