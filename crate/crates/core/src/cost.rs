//! Class-dependent misclassification costs applied to network posteriors.
//!
//! The operational form is a cost vector with one entry per class: the
//! posterior of class `j` is scaled by the retained mass `1 - c[j]` and the
//! prediction is the argmax of the scaled row. A full [`CostMatrix`] is kept
//! for expected-risk diagnostics.

use alloc::vec::Vec;

use crate::dbn::argmax;
use crate::matrix::Matrix;
use crate::{Error, Result};

/// One misclassification cost per class, each in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<f64>", into = "Vec<f64>"))]
pub struct CostVector(Vec<f64>);

impl CostVector {
    pub fn new(costs: Vec<f64>) -> Result<Self> {
        if let Some(bad) = costs.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::param(alloc::format!("cost {bad} outside [0, 1]")));
        }
        Ok(CostVector(costs))
    }

    pub fn zeros(k: usize) -> Self {
        CostVector(alloc::vec![0.0; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for CostVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        CostVector::new(v)
    }
}

impl From<CostVector> for Vec<f64> {
    fn from(c: CostVector) -> Self {
        c.0
    }
}

/// Costs `C[i][j]` of predicting `j` when the truth is `i`; zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    k: usize,
    entries: Vec<f64>,
}

impl CostMatrix {
    pub fn new(k: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != k * k {
            return Err(Error::shape("CostMatrix::new", k * k, entries.len()));
        }
        if entries.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::param("cost matrix entries must lie in [0, 1]"));
        }
        if (0..k).any(|i| entries[i * k + i] != 0.0) {
            return Err(Error::param("correct classification must cost 0"));
        }
        Ok(CostMatrix { k, entries })
    }

    /// Unit cost for every error, the implicit matrix of cost-blind training.
    pub fn uniform(k: usize) -> Self {
        let entries = (0..k * k).map(|e| if e / k == e % k { 0.0 } else { 1.0 }).collect();
        CostMatrix { k, entries }
    }

    pub fn n_classes(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.k + j]
    }
}

fn check_width(probs: &Matrix, costs: &CostVector) -> Result<()> {
    if probs.cols() != costs.len() {
        return Err(Error::shape("cost layer", costs.len(), probs.cols()));
    }
    Ok(())
}

/// Entry `(n, j)` becomes `probs(n, j) · (1 − c[j])`. Rows are not renormalized.
pub fn apply_costs(probs: &Matrix, costs: &CostVector) -> Result<Matrix> {
    check_width(probs, costs)?;
    let c = costs.as_slice();
    Ok(Matrix::from_fn(probs.rows(), probs.cols(), |n, j| {
        probs.get(n, j) * (1.0 - c[j])
    }))
}

/// Argmax of the cost-scaled posteriors, ties to the lowest class index.
pub fn predict_with_costs(probs: &Matrix, costs: &CostVector) -> Result<Vec<usize>> {
    check_width(probs, costs)?;
    let c = costs.as_slice();
    let mut scaled = alloc::vec![0.0; c.len()];
    Ok(probs
        .iter_rows()
        .map(|row| {
            for ((s, p), cj) in scaled.iter_mut().zip(row).zip(c) {
                *s = p * (1.0 - cj);
            }
            argmax(&scaled)
        })
        .collect())
}

/// Expected cost `Σ_{j≠i} P(j|x)·C[i][j]` of deciding class `i`.
pub fn expected_risk(probs_row: &[f64], cm: &CostMatrix, i: usize) -> Result<f64> {
    if probs_row.len() != cm.k {
        return Err(Error::shape("expected_risk", cm.k, probs_row.len()));
    }
    if i >= cm.k {
        return Err(Error::param(alloc::format!(
            "class {i} out of range for {} classes",
            cm.k
        )));
    }
    Ok(probs_row
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, p)| p * cm.get(i, j))
        .sum())
}

/// `Σ_n Σ_i R(i | x_n) · P(x_n)` over all samples and candidate decisions.
pub fn overall_risk(probs: &Matrix, cm: &CostMatrix, priors: &[f64]) -> Result<f64> {
    if priors.len() != probs.rows() {
        return Err(Error::shape("overall_risk", probs.rows(), priors.len()));
    }
    let mut total = 0.0;
    for (row, prior) in probs.iter_rows().zip(priors) {
        for i in 0..cm.k {
            total += expected_risk(row, cm, i)? * prior;
        }
    }
    Ok(total)
}
