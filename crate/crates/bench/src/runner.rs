//! The (data set × trial × fold) benchmark grid.
//!
//! Every seed is derived from the master seed, the data set name, the trial
//! and the fold, so results do not depend on how runs are scheduled across
//! worker threads. Within one (data set, trial, fold) both methods share the
//! same trained network: `dbn` reports its plain argmax predictions and
//! `ecs-dbn` the cost-adjusted ones, which makes the two paired.

use std::time::Instant;

use ecsdbn_core::cost::{apply_costs, CostVector};
use ecsdbn_core::dbn::{argmax_rows, random_layer_sizes};
use ecsdbn_core::matrix::Matrix;
use ecsdbn_core::metrics::{accuracy, auc, confusion, f1, gmean, precision, recall};
use ecsdbn_core::rng::{derive_key, RngStream};
use ecsdbn_core::trainer::{evolve_costs, train_dbn};
use rayon::prelude::*;

use crate::catalog::CatalogEntry;
use crate::config::{Hidden, Method, RunSettings, Split};
use crate::error::{BenchError, Result};
use crate::keel::{read_keel, Dataset};
use crate::record::{Metrics, RunRecord};
use crate::split::{stratified_kfold, MinMax};

const DE_STREAM: u64 = 0xDE;
const HIDDEN_STREAM: u64 = 0x41D;

/// Stable 64-bit FNV-1a hash, used to give each data set its own seed.
pub fn name_key(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

pub fn dataset_seed(master: u64, name: &str) -> u64 {
    derive_key(master, name_key(name))
}

pub fn trial_seed(master: u64, name: &str, trial: usize) -> u64 {
    derive_key(dataset_seed(master, name), trial as u64)
}

pub fn run_seed(master: u64, name: &str, trial: usize, fold: usize) -> u64 {
    derive_key(trial_seed(master, name, trial), fold as u64)
}

/// A catalog entry loaded for the chosen split.
#[derive(Clone, Debug)]
pub struct LoadedDataset {
    pub name: String,
    pub train: Dataset,
    pub test: Option<Dataset>,
}

pub fn load_entry(entry: &CatalogEntry, split: Split) -> Result<LoadedDataset> {
    let train = read_keel(&entry.train)?;
    let test = match (split, &entry.test) {
        (Split::Keel, Some(path)) => Some(read_keel(path)?.aligned_to(&train)?),
        (Split::Keel, None) => {
            return Err(BenchError::Config(format!(
                "{}: keel split needs a test file in the catalog",
                entry.name
            )));
        }
        (Split::Cv, _) => None,
    };
    Ok(LoadedDataset {
        name: entry.name.clone(),
        train,
        test,
    })
}

/// Test-set metrics with the minority class as the positive class.
pub fn evaluate(
    y: &[usize],
    predicted: &[usize],
    positive_scores: &[f64],
    k: usize,
    positive: usize,
) -> Result<Metrics> {
    let cm = confusion(y, predicted, k)?;
    Ok(Metrics {
        accuracy: accuracy(&cm)?,
        gmean: gmean(&cm)?,
        precision: precision(&cm, positive).value,
        recall: recall(&cm, positive).value,
        f1: f1(&cm, positive).value,
        auc: auc(y, positive_scores, positive)?,
    })
}

/// Share of the positive class in each row of cost-scaled posteriors.
fn positive_share(scaled: &Matrix, positive: usize) -> Vec<f64> {
    scaled
        .iter_rows()
        .map(|row| {
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                row[positive] / total
            } else {
                0.0
            }
        })
        .collect()
}

#[derive(Clone, Debug)]
struct Task {
    dataset: usize,
    trial: usize,
    fold: usize,
    train: Vec<usize>,
    test: Vec<usize>,
}

/// Runs every requested method on one train/test partition.
pub fn run_partition(
    settings: &RunSettings,
    name: &str,
    train: &Dataset,
    test: &Dataset,
    trial: usize,
    fold: usize,
) -> Result<Vec<RunRecord>> {
    let seed = run_seed(settings.seed, name, trial, fold);
    let scaler = MinMax::fit(&train.features);
    let x_train = scaler.apply(&train.features)?;
    let x_test = scaler.apply(&test.features)?;
    let k = train.n_classes();
    let positive = train.minority_class;

    let layers = match settings.hidden {
        Hidden::Fixed => settings.layers.clone(),
        Hidden::Random => random_layer_sizes(settings.layers.len(), &mut RngStream::new(seed, HIDDEN_STREAM)),
    };
    let cfg = settings.dbn_config(k, seed, layers);

    let started = Instant::now();
    let (dbn, _) = train_dbn(&x_train, &train.labels, &cfg)?;
    let dbn_time = started.elapsed().as_secs_f64();
    let probs = dbn.predict_proba(&x_test)?;

    let mut records = Vec::with_capacity(settings.methods.len());
    for &method in &settings.methods {
        let (metrics, wall, costs) = match method {
            Method::Dbn => {
                let t = Instant::now();
                let predicted = argmax_rows(&probs);
                let scores: Vec<f64> = probs.iter_rows().map(|r| r[positive]).collect();
                let m = evaluate(&test.labels, &predicted, &scores, k, positive)?;
                (m, dbn_time + t.elapsed().as_secs_f64(), None)
            }
            Method::EcsDbn => {
                let t = Instant::now();
                let model = evolve_costs(
                    dbn.clone(),
                    &x_train,
                    &train.labels,
                    settings.de_params(),
                    &RngStream::new(seed, DE_STREAM),
                    |_| {},
                )?;
                let scaled = apply_costs(&probs, &model.best_costs)?;
                let predicted = argmax_rows(&scaled);
                let m = evaluate(
                    &test.labels,
                    &predicted,
                    &positive_share(&scaled, positive),
                    k,
                    positive,
                )?;
                (m, dbn_time + t.elapsed().as_secs_f64(), Some(model.best_costs))
            }
        };
        records.push(RunRecord {
            dataset: name.to_string(),
            method: method.name().to_string(),
            trial,
            fold,
            seed,
            metrics,
            wall_time_s: wall,
            best_costs: costs.map(CostVector::into_inner),
        });
    }
    Ok(records)
}

/// One failed data set or run.
#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub dataset: String,
    /// `(trial, fold)` when a single run failed rather than the whole data set.
    pub run: Option<(usize, usize)>,
    pub message: String,
}

#[derive(Clone, Debug, Default)]
pub struct BenchReport {
    /// Ordered by catalog position, trial, fold, then method order.
    pub records: Vec<RunRecord>,
    pub failures: Vec<Failure>,
}

/// Loads every catalog entry and runs the full grid on a pool of
/// `settings.jobs` threads. Data sets that fail to load are skipped and
/// reported in [`BenchReport::failures`].
pub fn run_benchmark(entries: &[CatalogEntry], settings: &RunSettings) -> Result<BenchReport> {
    settings.validate()?;
    let mut report = BenchReport::default();
    let mut loaded = Vec::new();
    for entry in entries {
        match load_entry(entry, settings.split) {
            Ok(ds) => loaded.push(ds),
            Err(e) => {
                log::error!("skipping {}: {e}", entry.name);
                report.failures.push(Failure {
                    dataset: entry.name.clone(),
                    run: None,
                    message: e.to_string(),
                });
            }
        }
    }
    run_loaded(&loaded, settings, &mut report)?;
    Ok(report)
}

fn run_loaded(loaded: &[LoadedDataset], settings: &RunSettings, report: &mut BenchReport) -> Result<()> {
    let mut tasks = Vec::new();
    for (d, ds) in loaded.iter().enumerate() {
        for trial in 0..settings.trials {
            match settings.split {
                Split::Keel => tasks.push(Task {
                    dataset: d,
                    trial,
                    fold: 0,
                    train: (0..ds.train.n_samples()).collect(),
                    test: Vec::new(),
                }),
                Split::Cv => {
                    let plan = stratified_kfold(
                        &ds.train.labels,
                        settings.folds,
                        trial_seed(settings.seed, &ds.name, trial),
                    )?;
                    for fold in 0..settings.folds {
                        let (train, test) = plan.split(fold);
                        tasks.push(Task {
                            dataset: d,
                            trial,
                            fold,
                            train,
                            test,
                        });
                    }
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.jobs)
        .build()
        .map_err(|e| BenchError::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<Vec<RunRecord>>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|t| {
                let ds = &loaded[t.dataset];
                let (train, test) = match &ds.test {
                    Some(test) => (ds.train.clone(), test.clone()),
                    None => (ds.train.subset(&t.train), ds.train.subset(&t.test)),
                };
                let out = run_partition(settings, &ds.name, &train, &test, t.trial, t.fold);
                log::debug!("{} trial {} fold {} done", ds.name, t.trial, t.fold);
                out
            })
            .collect()
    });

    for (task, result) in tasks.iter().zip(results) {
        match result {
            Ok(records) => report.records.extend(records),
            Err(e) => {
                let name = &loaded[task.dataset].name;
                log::error!("{name} trial {} fold {}: {e}", task.trial, task.fold);
                report.failures.push(Failure {
                    dataset: name.clone(),
                    run: Some((task.trial, task.fold)),
                    message: e.to_string(),
                });
            }
        }
    }
    Ok(())
}
