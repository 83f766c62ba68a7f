//! Adaptive differential evolution over box-bounded real vectors.
//!
//! Each individual draws its own crossover probability from
//! `N(μ_CR, 0.1)` and mutation factor from `Cauchy(μ_F, 0.1)`. Mutation is
//! `c_i + F_i·(c_j − c_k)` with distinct random `j, k ≠ i`, followed by
//! binomial crossover and greedy selection (a tie keeps the parent). Parents
//! displaced by better trials go to a bounded archive, and the control
//! parameters of successful trials pull `μ_CR` and `μ_F` towards their means
//! at rate `β`.
//!
//! Generations are synchronous: all trials of a generation are built from the
//! population as it stood at the start of the generation, evaluated together,
//! and only then selected. Every individual draws from its own stream derived
//! from `(generation, index)`, so evaluation may happen in any order or in
//! parallel without changing the outcome.

use alloc::vec::Vec;

use crate::rng::RngStream;
use crate::{Error, Result};

const INIT_TAG: u64 = 0xD1;
const GENERATION_TAG: u64 = 0xD2;
const ARCHIVE_TAG: u64 = u64::MAX;

/// Standard deviation of the crossover-probability draw and scale of the
/// mutation-factor draw.
pub const CONTROL_SPREAD: f64 = 0.1;

/// Per-gene search box.
#[derive(Clone, Debug, PartialEq)]
pub enum Bounds {
    /// The same `[lo, hi]` for every gene.
    Uniform(f64, f64),
    /// One `[lo, hi]` per gene.
    PerGene(Vec<(f64, f64)>),
}

impl Bounds {
    pub fn get(&self, d: usize) -> (f64, f64) {
        match self {
            Bounds::Uniform(lo, hi) => (*lo, *hi),
            Bounds::PerGene(b) => b[d],
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if let Bounds::PerGene(b) = self {
            if b.len() != dim {
                return Err(Error::shape("Bounds", dim, b.len()));
            }
        }
        for d in 0..dim {
            let (lo, hi) = self.get(d);
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::param(alloc::format!(
                    "gene {d}: bounds [{lo}, {hi}] are not ordered"
                )));
            }
        }
        Ok(())
    }

    fn clip(&self, d: usize, v: f64) -> f64 {
        let (lo, hi) = self.get(d);
        v.clamp(lo, hi)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeParams {
    pub population_size: usize,
    pub max_generations: usize,
    /// Initial mean of the crossover-probability distribution.
    pub mu_cr: f64,
    /// Initial location of the mutation-factor distribution.
    pub mu_f: f64,
    /// Adaptation rate of `mu_cr` and `mu_f`.
    pub beta: f64,
    pub bounds: Bounds,
    /// Stop once the best fitness has not changed for this many generations.
    pub stagnation_window: usize,
}

impl Default for DeParams {
    fn default() -> Self {
        DeParams {
            population_size: 30,
            max_generations: 100,
            mu_cr: 0.5,
            mu_f: 0.5,
            beta: 0.5,
            bounds: Bounds::Uniform(0.0, 1.0),
            stagnation_window: 30,
        }
    }
}

impl DeParams {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.population_size < 4 {
            return Err(Error::param("population_size must be >= 4"));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::param("beta must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.mu_cr) {
            return Err(Error::param("mu_cr must lie in [0, 1]"));
        }
        if !(self.mu_f > 0.0 && self.mu_f <= 1.0) {
            return Err(Error::param("mu_f must lie in (0, 1]"));
        }
        if dim == 0 {
            return Err(Error::param("dimension must be >= 1"));
        }
        self.bounds.validate(dim)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub genes: Vec<f64>,
    /// `None` until evaluated.
    pub fitness: Option<f64>,
}

impl Individual {
    pub fn evaluated(genes: Vec<f64>, fitness: f64) -> Self {
        Individual {
            genes,
            fitness: Some(fitness),
        }
    }

    fn score(&self) -> f64 {
        self.fitness.unwrap_or(f64::NEG_INFINITY)
    }
}

/// Control parameters of the trials that beat their parents in one generation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SuccessSets {
    pub s_cr: Vec<f64>,
    pub s_f: Vec<f64>,
}

/// Population, archive and adaptive parameters between generations.
#[derive(Clone, Debug, PartialEq)]
pub struct DeState {
    params: DeParams,
    dim: usize,
    pub population: Vec<Individual>,
    pub archive: Vec<Individual>,
    pub mu_cr: f64,
    pub mu_f: f64,
    /// Completed evolution generations; 0 right after initialization.
    pub generation: usize,
    best: Individual,
    /// Best fitness after each completed generation.
    pub best_history: Vec<f64>,
    /// Generations in a row whose best fitness equalled the previous one.
    stagnant: usize,
}

/// One trial vector together with the control parameters that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Trial {
    pub genes: Vec<f64>,
    pub cr: f64,
    pub f: f64,
}

impl DeState {
    /// Samples `N` individuals uniformly in the box and evaluates them.
    pub fn initialize(
        params: DeParams,
        dim: usize,
        rng: &RngStream,
        mut fitness: impl FnMut(&[f64]) -> f64,
    ) -> Result<Self> {
        let genes = initial_genes(&params, dim, rng)?;
        let scores: Vec<f64> = genes.iter().map(|g| fitness(g)).collect();
        Self::from_evaluated(params, dim, genes, scores)
    }

    /// Like [`DeState::initialize`] but evaluates the initial population in
    /// one batch call.
    pub fn initialize_batched(
        params: DeParams,
        dim: usize,
        rng: &RngStream,
        evaluate: &mut impl FnMut(&[Vec<f64>]) -> Vec<f64>,
    ) -> Result<Self> {
        let genes = initial_genes(&params, dim, rng)?;
        let scores = evaluate(&genes);
        Self::from_evaluated(params, dim, genes, scores)
    }

    fn from_evaluated(params: DeParams, dim: usize, genes: Vec<Vec<f64>>, scores: Vec<f64>) -> Result<Self> {
        if scores.len() != genes.len() {
            return Err(Error::shape("DE evaluation", genes.len(), scores.len()));
        }
        let population: Vec<Individual> = genes
            .into_iter()
            .zip(scores)
            .map(|(g, s)| Individual::evaluated(g, s))
            .collect();
        let best = best_of(&population).clone();
        Ok(DeState {
            mu_cr: params.mu_cr,
            mu_f: params.mu_f,
            params,
            dim,
            population,
            archive: Vec::new(),
            generation: 0,
            best,
            best_history: Vec::new(),
            stagnant: 0,
        })
    }

    pub fn params(&self) -> &DeParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Best individual seen so far.
    pub fn best(&self) -> &Individual {
        &self.best
    }

    /// Whether the stagnation rule or the generation cap has fired.
    pub fn finished(&self) -> bool {
        self.generation >= self.params.max_generations
            || (self.params.stagnation_window > 0 && self.stagnant >= self.params.stagnation_window)
    }

    /// Draws `(cr_i, f_i)`: `cr_i ~ N(μ_CR, 0.1)` clipped to `[0, 1]`;
    /// `f_i ~ Cauchy(μ_F, 0.1)`, redrawn while non-positive, truncated at 1.
    pub fn sample_control_params(&self, rng: &mut RngStream) -> (f64, f64) {
        let cr = rng
            .sample_normal(self.mu_cr, CONTROL_SPREAD)
            .expect("positive spread")
            .clamp(0.0, 1.0);
        let f = loop {
            let f = rng.sample_cauchy(self.mu_f, CONTROL_SPREAD).expect("positive spread");
            if f > 0.0 {
                break f.min(1.0);
            }
        };
        (cr, f)
    }

    /// Donor vector `c_i + f·(c_j − c_k)` with `j ≠ k`, both `≠ i`, clipped
    /// to the bounds.
    pub fn mutate(&self, i: usize, f: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
        let n = self.population.len();
        if n < 3 {
            return Err(Error::State(alloc::format!("mutation needs 3 individuals, have {n}")));
        }
        if i >= n {
            return Err(Error::param(alloc::format!("individual {i} out of range")));
        }
        let j = loop {
            let j = rng.below(n);
            if j != i {
                break j;
            }
        };
        let k = loop {
            let k = rng.below(n);
            if k != i && k != j {
                break k;
            }
        };
        Ok(self.donor(i, j, k, f))
    }

    /// The donor for explicitly chosen partners.
    pub fn donor(&self, i: usize, j: usize, k: usize, f: f64) -> Vec<f64> {
        let (ci, cj, ck) = (
            &self.population[i].genes,
            &self.population[j].genes,
            &self.population[k].genes,
        );
        (0..self.dim)
            .map(|d| self.params.bounds.clip(d, ci[d] + f * (cj[d] - ck[d])))
            .collect()
    }

    /// Builds the trial of individual `i` from its own stream.
    pub fn make_trial(&self, i: usize, rng: &mut RngStream) -> Result<Trial> {
        let (cr, f) = self.sample_control_params(rng);
        let donor = self.mutate(i, f, rng)?;
        let genes = crossover(&self.population[i].genes, &donor, cr, rng)?;
        Ok(Trial { genes, cr, f })
    }

    /// Greedy replacement: the trial replaces the parent only if strictly
    /// fitter. The displaced parent joins the archive and the trial's control
    /// parameters join the success sets. Returns whether replacement happened.
    pub fn select(&mut self, i: usize, trial: Individual, cr: f64, f: f64, success: &mut SuccessSets) -> Result<bool> {
        let Some(trial_fitness) = trial.fitness else {
            return Err(Error::State("trial has not been evaluated".into()));
        };
        if i >= self.population.len() {
            return Err(Error::param(alloc::format!("individual {i} out of range")));
        }
        if self.population[i].score() >= trial_fitness {
            return Ok(false);
        }
        if trial_fitness > self.best.score() {
            self.best = trial.clone();
        }
        let parent = core::mem::replace(&mut self.population[i], trial);
        self.archive.push(parent);
        success.s_cr.push(cr);
        success.s_f.push(f);
        Ok(true)
    }

    /// Randomly evicts archive members until `|A| ≤ N`.
    pub fn trim_archive(&mut self, rng: &mut RngStream) {
        while self.archive.len() > self.params.population_size {
            let idx = rng.below(self.archive.len());
            self.archive.swap_remove(idx);
        }
    }

    /// `μ ← (1−β)·μ + β·mean(S)` for both parameters; an empty set leaves
    /// its parameter unchanged.
    pub fn adapt_parameters(&mut self, success: &SuccessSets) {
        let beta = self.params.beta;
        if let Some(m) = mean(&success.s_cr) {
            self.mu_cr = (1.0 - beta) * self.mu_cr + beta * m;
        }
        if let Some(m) = mean(&success.s_f) {
            self.mu_f = (1.0 - beta) * self.mu_f + beta * m;
        }
    }

    /// Runs one synchronous generation, evaluating all trials in a single
    /// `evaluate` call.
    pub fn step(&mut self, rng: &RngStream, evaluate: &mut impl FnMut(&[Vec<f64>]) -> Vec<f64>) -> Result<()> {
        let g = self.generation + 1;
        let gen_rng = rng.derive(GENERATION_TAG).derive(g as u64);
        let trials = (0..self.population.len())
            .map(|i| self.make_trial(i, &mut gen_rng.derive(i as u64)))
            .collect::<Result<Vec<_>>>()?;
        let genes: Vec<Vec<f64>> = trials.iter().map(|t| t.genes.clone()).collect();
        let scores = evaluate(&genes);
        if scores.len() != trials.len() {
            return Err(Error::shape("DE evaluation", trials.len(), scores.len()));
        }

        let previous_best = self.best.score();
        let mut success = SuccessSets::default();
        for (i, (trial, score)) in trials.into_iter().zip(scores).enumerate() {
            let Trial { genes, cr, f } = trial;
            self.select(i, Individual::evaluated(genes, score), cr, f, &mut success)?;
        }
        self.trim_archive(&mut gen_rng.derive(ARCHIVE_TAG));
        self.adapt_parameters(&success);

        self.generation = g;
        let best = self.best.score();
        // the first generation has no predecessor generation to compare against
        if g > 1 && best == previous_best {
            self.stagnant += 1;
        } else {
            self.stagnant = 0;
        }
        self.best_history.push(best);
        Ok(())
    }
}

/// Binomial crossover: gene `d` comes from the donor when `d` is the forced
/// index or a uniform draw falls below `cr`; otherwise from the target.
pub fn crossover(target: &[f64], donor: &[f64], cr: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
    if target.len() != donor.len() {
        return Err(Error::shape("crossover", target.len(), donor.len()));
    }
    if target.is_empty() {
        return Ok(Vec::new());
    }
    let forced = rng.below(target.len());
    Ok(target
        .iter()
        .zip(donor)
        .enumerate()
        .map(|(d, (&t, &v))| if d == forced || rng.next_unit() < cr { v } else { t })
        .collect())
}

fn initial_genes(params: &DeParams, dim: usize, rng: &RngStream) -> Result<Vec<Vec<f64>>> {
    params.validate(dim)?;
    let mut init = rng.derive(INIT_TAG);
    (0..params.population_size)
        .map(|_| {
            (0..dim)
                .map(|d| {
                    let (lo, hi) = params.bounds.get(d);
                    init.sample_uniform(lo, hi)
                })
                .collect()
        })
        .collect()
}

fn best_of(population: &[Individual]) -> &Individual {
    // first index wins ties
    let mut best = &population[0];
    for ind in &population[1..] {
        if ind.score() > best.score() {
            best = ind;
        }
    }
    best
}

fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

/// Summary of a finished run.
#[derive(Clone, Debug, PartialEq)]
pub struct DeOutcome {
    /// Best individual ever evaluated.
    pub best: Individual,
    /// Best fitness of the initial population.
    pub initial_best: f64,
    /// Best fitness after each generation.
    pub trace: Vec<f64>,
    /// Generations actually run.
    pub generations: usize,
    pub final_mu_cr: f64,
    pub final_mu_f: f64,
}

/// Per-generation snapshot handed to [`evolve_with`] observers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_fitness: f64,
    pub mu_cr: f64,
    pub mu_f: f64,
    pub archive_len: usize,
}

/// Maximizes `fitness` over the box in `params`, evaluating one vector at a time.
pub fn evolve(
    params: DeParams,
    dim: usize,
    rng: &RngStream,
    mut fitness: impl FnMut(&[f64]) -> f64,
) -> Result<DeOutcome> {
    evolve_with(
        params,
        dim,
        rng,
        &mut |batch: &[Vec<f64>]| batch.iter().map(|g| fitness(g)).collect(),
        |_| {},
    )
}

/// Maximizes with a batch evaluator (one call per generation) and an
/// observer called after initialization (generation 0) and after every
/// generation.
pub fn evolve_with(
    params: DeParams,
    dim: usize,
    rng: &RngStream,
    evaluate: &mut impl FnMut(&[Vec<f64>]) -> Vec<f64>,
    mut observe: impl FnMut(&GenerationRecord),
) -> Result<DeOutcome> {
    let mut state = DeState::initialize_batched(params, dim, rng, evaluate)?;
    let initial_best = state.best().score();
    let record = |s: &DeState| GenerationRecord {
        generation: s.generation,
        best_fitness: s.best.score(),
        mu_cr: s.mu_cr,
        mu_f: s.mu_f,
        archive_len: s.archive.len(),
    };
    observe(&record(&state));
    while !state.finished() {
        state.step(rng, evaluate)?;
        observe(&record(&state));
    }
    Ok(DeOutcome {
        best: state.best.clone(),
        initial_best,
        trace: state.best_history.clone(),
        generations: state.generation,
        final_mu_cr: state.mu_cr,
        final_mu_f: state.mu_f,
    })
}
