//! End-to-end training of an evolutionary cost-sensitive DBN.
//!
//! The network is pre-trained and fine-tuned once. Its training posteriors
//! are computed once and cached; differential evolution then searches the
//! per-class cost vector whose cost-scaled predictions maximize training
//! G-mean. Because costs only rescale fixed posteriors, evaluating a
//! candidate never touches the network.

use alloc::vec::Vec;

use crate::cost::{predict_with_costs, CostVector};
use crate::dbn::{Dbn, DbnConfig, FinetuneReport};
use crate::de::{evolve_with, Bounds, DeParams, GenerationRecord};
use crate::matrix::Matrix;
use crate::metrics::{confusion, gmean};
use crate::rng::RngStream;
use crate::{Error, Result};

/// A trained DBN bound to its evolved cost vector.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EcsDbnModel {
    pub dbn: Dbn,
    pub best_costs: CostVector,
    /// Training G-mean reached by `best_costs`.
    pub training_fitness: f64,
    /// Best training G-mean among the randomly initialized cost vectors.
    pub initial_best_fitness: f64,
    /// Best fitness after each DE generation.
    pub de_trace: Vec<f64>,
}

impl EcsDbnModel {
    /// Cost-adjusted predictions for `x`.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        predict_with_costs(&self.dbn.predict_proba(x)?, &self.best_costs)
    }

    pub fn n_classes(&self) -> usize {
        self.dbn.n_classes()
    }
}

/// G-mean of cost-adjusted predictions over cached posteriors.
#[derive(Clone, Debug)]
pub struct CostFitness {
    probs: Matrix,
    labels: Vec<usize>,
}

impl CostFitness {
    pub fn new(probs: Matrix, labels: Vec<usize>) -> Result<Self> {
        if probs.rows() != labels.len() {
            return Err(Error::shape("CostFitness", probs.rows(), labels.len()));
        }
        check_all_classes_present(&labels, probs.cols())?;
        Ok(CostFitness { probs, labels })
    }

    pub fn n_classes(&self) -> usize {
        self.probs.cols()
    }

    /// Training G-mean of the given costs. Genes outside `[0, 1]` are
    /// clamped first.
    pub fn evaluate(&self, genes: &[f64]) -> f64 {
        let costs =
            CostVector::new(genes.iter().map(|g| g.clamp(0.0, 1.0)).collect()).expect("clamped costs are valid");
        let predicted = predict_with_costs(&self.probs, &costs).expect("width checked at construction");
        let cm = confusion(&self.labels, &predicted, self.n_classes()).expect("labels checked");
        gmean(&cm).expect("every class has support")
    }
}

fn check_all_classes_present(labels: &[usize], k: usize) -> Result<()> {
    let mut seen = alloc::vec![false; k];
    for &y in labels {
        if y >= k {
            return Err(Error::Data(alloc::format!("label {y} out of range for {k} classes")));
        }
        seen[y] = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::Data(alloc::format!("class {missing} has no training samples")));
    }
    Ok(())
}

/// Pre-trains then fine-tunes a DBN on the training set.
pub fn train_dbn(x: &Matrix, y: &[usize], cfg: &DbnConfig) -> Result<(Dbn, FinetuneReport)> {
    check_all_classes_present(y, cfg.n_classes)?;
    let mut dbn = Dbn::pretrain(cfg, x)?;
    let report = dbn.finetune(x, y, cfg)?;
    Ok((dbn, report))
}

/// Evolves the cost vector of an already trained network.
pub fn evolve_costs(
    dbn: Dbn,
    x: &Matrix,
    y: &[usize],
    de_params: DeParams,
    rng: &RngStream,
    observe: impl FnMut(&GenerationRecord),
) -> Result<EcsDbnModel> {
    let k = dbn.n_classes();
    for d in 0..k {
        let (lo, hi) = match &de_params.bounds {
            Bounds::PerGene(b) if b.len() != k => {
                return Err(Error::shape("cost bounds", k, b.len()));
            }
            b => b.get(d),
        };
        if lo < 0.0 || hi > 1.0 {
            return Err(Error::param("cost bounds must lie within [0, 1]"));
        }
    }
    let fitness = CostFitness::new(dbn.predict_proba(x)?, y.to_vec())?;
    let outcome = evolve_with(
        de_params,
        k,
        rng,
        &mut |batch: &[Vec<f64>]| batch.iter().map(|g| fitness.evaluate(g)).collect(),
        observe,
    )?;
    let training_fitness = outcome.best.fitness.unwrap_or(0.0);
    Ok(EcsDbnModel {
        dbn,
        best_costs: CostVector::new(outcome.best.genes)?,
        training_fitness,
        initial_best_fitness: outcome.initial_best,
        de_trace: outcome.trace,
    })
}

/// Full training: DBN first, then cost evolution on its cached posteriors.
pub fn train(
    x: &Matrix,
    y: &[usize],
    dbn_cfg: &DbnConfig,
    de_params: DeParams,
    rng: &RngStream,
) -> Result<EcsDbnModel> {
    let (dbn, _) = train_dbn(x, y, dbn_cfg)?;
    evolve_costs(dbn, x, y, de_params, rng, |_| {})
}
