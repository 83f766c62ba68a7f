//! Confusion-matrix metrics, rank-based AUC and the imbalance ratio.
//!
//! Binary metrics treat one class as positive (by convention the minority
//! class). Ratios with a zero denominator evaluate to 0 and are flagged as
//! degenerate rather than producing NaN, so scores stay totally ordered.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// `counts[i][j]` = samples of true class `i` predicted as class `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> Self {
        ConfusionMatrix {
            k,
            counts: vec![0; k * k],
        }
    }

    pub fn from_counts(k: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != k * k {
            return Err(Error::shape("ConfusionMatrix::from_counts", k * k, counts.len()));
        }
        Ok(ConfusionMatrix { k, counts })
    }

    /// Binary table with class 1 as the positive class.
    pub fn binary(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        ConfusionMatrix {
            k: 2,
            counts: vec![tn, fp, fn_, tp],
        }
    }

    pub fn n_classes(&self) -> usize {
        self.k
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.k + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn support(&self, class: usize) -> u64 {
        (0..self.k).map(|j| self.get(class, j)).sum()
    }

    fn predicted_count(&self, class: usize) -> u64 {
        (0..self.k).map(|i| self.get(i, class)).sum()
    }

    /// `(TP, FP, FN, TN)` with `positive` as the positive class.
    pub fn binary_counts(&self, positive: usize) -> (u64, u64, u64, u64) {
        let tp = self.get(positive, positive);
        let fp = self.predicted_count(positive) - tp;
        let fn_ = self.support(positive) - tp;
        let tn = self.total() - tp - fp - fn_;
        (tp, fp, fn_, tn)
    }

    /// Recall of each class; `None` for a class with no samples.
    pub fn class_recalls(&self) -> Vec<Option<f64>> {
        (0..self.k)
            .map(|c| {
                let s = self.support(c);
                (s > 0).then(|| self.get(c, c) as f64 / s as f64)
            })
            .collect()
    }
}

/// Tabulates predictions against the truth.
pub fn confusion(y_true: &[usize], y_pred: &[usize], k: usize) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::shape("confusion", y_true.len(), y_pred.len()));
    }
    let mut cm = ConfusionMatrix::new(k);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= k || p >= k {
            return Err(Error::Data(alloc::format!("label out of range for {k} classes")));
        }
        cm.counts[t * k + p] += 1;
    }
    Ok(cm)
}

/// A ratio metric together with a degeneracy flag (zero denominator).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Score {
    pub value: f64,
    pub degenerate: bool,
}

impl Score {
    fn ratio(num: u64, den: u64) -> Self {
        if den == 0 {
            Score {
                value: 0.0,
                degenerate: true,
            }
        } else {
            Score {
                value: num as f64 / den as f64,
                degenerate: false,
            }
        }
    }
}

/// Trace over total.
pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::UndefinedInput("accuracy of an empty confusion matrix".into()));
    }
    let correct: u64 = (0..cm.k).map(|i| cm.get(i, i)).sum();
    Ok(correct as f64 / total as f64)
}

/// Geometric mean of per-class recalls; for two classes this is
/// `sqrt(TP/(TP+FN) · TN/(TN+FP))`. A class with no samples is an error.
pub fn gmean(cm: &ConfusionMatrix) -> Result<f64> {
    if cm.k == 0 {
        return Err(Error::UndefinedInput("G-mean of a zero-class matrix".into()));
    }
    let mut product = 1.0;
    for (c, r) in cm.class_recalls().into_iter().enumerate() {
        let r = r.ok_or_else(|| Error::UndefinedInput(alloc::format!("class {c} has no samples")))?;
        if r == 0.0 {
            return Ok(0.0);
        }
        product *= r;
    }
    Ok(if cm.k == 2 {
        libm::sqrt(product)
    } else {
        libm::pow(product, 1.0 / cm.k as f64)
    })
}

/// `TP / (TP + FP)`.
pub fn precision(cm: &ConfusionMatrix, positive: usize) -> Score {
    let (tp, fp, _, _) = cm.binary_counts(positive);
    Score::ratio(tp, tp + fp)
}

/// `TP / (TP + FN)`.
pub fn recall(cm: &ConfusionMatrix, positive: usize) -> Score {
    let (tp, _, fn_, _) = cm.binary_counts(positive);
    Score::ratio(tp, tp + fn_)
}

/// Harmonic mean of precision and recall; 0 (flagged) when both are 0.
pub fn f1(cm: &ConfusionMatrix, positive: usize) -> Score {
    let p = precision(cm, positive);
    let r = recall(cm, positive);
    let den = p.value + r.value;
    if den == 0.0 {
        Score {
            value: 0.0,
            degenerate: true,
        }
    } else {
        Score {
            value: 2.0 * p.value * r.value / den,
            degenerate: p.degenerate || r.degenerate,
        }
    }
}

/// Mann–Whitney AUC of `scores` for separating `positive` from every other
/// class, with midranks for tied scores.
pub fn auc(y_true: &[usize], scores: &[f64], positive: usize) -> Result<f64> {
    if y_true.len() != scores.len() {
        return Err(Error::shape("auc", y_true.len(), scores.len()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Data("AUC scores must not be NaN".into()));
    }
    let n_pos = y_true.iter().filter(|&&y| y == positive).count();
    let n_neg = y_true.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedInput(
            "AUC needs both positive and negative samples".into(),
        ));
    }
    let ranks = midranks(scores);
    let pos_rank_sum: f64 = y_true
        .iter()
        .zip(&ranks)
        .filter(|(&y, _)| y == positive)
        .map(|(_, r)| r)
        .sum();
    let (p, n) = (n_pos as f64, n_neg as f64);
    let u = pos_rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * n))
}

/// 1-based ranks with ties sharing the mean of their positions.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end share their mean
        let r = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = r;
        }
        start = end;
    }
    ranks
}

/// Per-class sample counts, indexed by label.
pub fn class_counts(y: &[usize]) -> Vec<usize> {
    let k = y.iter().max().map_or(0, |&m| m + 1);
    let mut counts = vec![0; k];
    for &c in y {
        counts[c] += 1;
    }
    counts
}

/// Majority count over minority count among the classes that occur.
pub fn imbalance_ratio(y: &[usize]) -> Result<f64> {
    let present: Vec<usize> = class_counts(y).into_iter().filter(|&c| c > 0).collect();
    if present.len() < 2 {
        return Err(Error::Data("imbalance ratio needs at least two classes".into()));
    }
    let max = *present.iter().max().expect("non-empty");
    let min = *present.iter().min().expect("non-empty");
    Ok(max as f64 / min as f64)
}
