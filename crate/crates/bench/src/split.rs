//! Min-max scaling and stratified k-fold plans.

use ecsdbn_core::matrix::Matrix;
use ecsdbn_core::rng::RngStream;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

const FOLD_STREAM: u64 = 0xF01D;

/// Per-column `(min, max)` learned from a training partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinMax {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMax {
    pub fn fit(x: &Matrix) -> MinMax {
        let mut min = vec![f64::INFINITY; x.cols()];
        let mut max = vec![f64::NEG_INFINITY; x.cols()];
        for row in x.iter_rows() {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        if x.rows() == 0 {
            min.fill(0.0);
            max.fill(0.0);
        }
        MinMax { min, max }
    }

    /// `(x - min) / (max - min)` clipped to `[0, 1]`; constant columns map to 0.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.min.len() {
            return Err(ecsdbn_core::Error::Shape {
                op: "MinMax::apply",
                expected: self.min.len().to_string(),
                found: x.cols().to_string(),
            }
            .into());
        }
        Ok(Matrix::from_fn(x.rows(), x.cols(), |i, j| {
            let span = self.max[j] - self.min[j];
            if span > 0.0 {
                ((x.get(i, j) - self.min[j]) / span).clamp(0.0, 1.0)
            } else {
                0.0
            }
        }))
    }
}

/// Fits on `x` and returns the scaled matrix with its parameters.
pub fn minmax_normalize(x: &Matrix) -> (Matrix, MinMax) {
    let mm = MinMax::fit(x);
    let scaled = mm.apply(x).expect("fitted on the same width");
    (scaled, mm)
}

/// Fold index of every sample.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub trial_seed: u64,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    /// `(train, test)` indices for fold `f`, both ascending.
    pub fn split(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.assignments.len()).partition(|&i| self.assignments[i] != f)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Shuffles each class with a seeded stream and deals its members to folds
/// round-robin. The dealing position carries over from one class to the next,
/// which also keeps total fold sizes within one of each other.
pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(BenchError::Config(format!("need at least 2 folds, got {k}")));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut rng = RngStream::new(seed, FOLD_STREAM);
    let mut assignments = vec![0; labels.len()];
    let mut next = 0;
    for c in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < k {
            log::warn!(
                "class {c} has {} samples for {k} folds; some folds get none",
                members.len()
            );
        }
        rng.shuffle(&mut members);
        for i in members {
            assignments[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldPlan {
        k,
        trial_seed: seed,
        assignments,
    })
}
