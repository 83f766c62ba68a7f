//! Per-run records and their CSV form.
//!
//! Columns: `dataset, method, trial, fold, seed, accuracy, gmean, precision,
//! recall, f1, auc, best_costs, wall_time_s`. `best_costs` holds the evolved
//! cost vector as `;`-separated values and is empty for methods without one.
//! Floats are written in shortest round-trip form, so reading a file back
//! gives bit-identical values.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

pub const METRIC_NAMES: [&str; 6] = ["accuracy", "gmean", "precision", "recall", "f1", "auc"];

/// Column holding wall-clock time; excluded from determinism comparisons.
pub const WALL_TIME_COLUMN: &str = "wall_time_s";

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub gmean: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
}

impl Metrics {
    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "accuracy" => self.accuracy,
            "gmean" => self.gmean,
            "precision" => self.precision,
            "recall" => self.recall,
            "f1" => self.f1,
            "auc" => self.auc,
            _ => return None,
        })
    }

    pub fn values(&self) -> [f64; 6] {
        [
            self.accuracy,
            self.gmean,
            self.precision,
            self.recall,
            self.f1,
            self.auc,
        ]
    }

    pub fn from_values(v: [f64; 6]) -> Metrics {
        Metrics {
            accuracy: v[0],
            gmean: v[1],
            precision: v[2],
            recall: v[3],
            f1: v[4],
            auc: v[5],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub dataset: String,
    pub method: String,
    pub trial: usize,
    pub fold: usize,
    pub seed: u64,
    pub metrics: Metrics,
    pub wall_time_s: f64,
    pub best_costs: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct Row {
    dataset: String,
    method: String,
    trial: usize,
    fold: usize,
    seed: u64,
    accuracy: f64,
    gmean: f64,
    precision: f64,
    recall: f64,
    f1: f64,
    auc: f64,
    best_costs: String,
    wall_time_s: f64,
}

impl From<&RunRecord> for Row {
    fn from(r: &RunRecord) -> Row {
        let m = r.metrics;
        Row {
            dataset: r.dataset.clone(),
            method: r.method.clone(),
            trial: r.trial,
            fold: r.fold,
            seed: r.seed,
            accuracy: m.accuracy,
            gmean: m.gmean,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            auc: m.auc,
            best_costs: r
                .best_costs
                .as_ref()
                .map(|c| c.iter().map(f64::to_string).collect::<Vec<_>>().join(";"))
                .unwrap_or_default(),
            wall_time_s: r.wall_time_s,
        }
    }
}

impl TryFrom<Row> for RunRecord {
    type Error = BenchError;

    fn try_from(row: Row) -> Result<RunRecord> {
        let best_costs = if row.best_costs.is_empty() {
            None
        } else {
            Some(
                row.best_costs
                    .split(';')
                    .map(|v| {
                        v.parse::<f64>()
                            .map_err(|_| BenchError::format(0, format!("bad cost value {v:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?,
            )
        };
        Ok(RunRecord {
            dataset: row.dataset,
            method: row.method,
            trial: row.trial,
            fold: row.fold,
            seed: row.seed,
            metrics: Metrics {
                accuracy: row.accuracy,
                gmean: row.gmean,
                precision: row.precision,
                recall: row.recall,
                f1: row.f1,
                auc: row.auc,
            },
            wall_time_s: row.wall_time_s,
            best_costs,
        })
    }
}

pub fn write_records<W: Write>(out: W, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(Row::from(r))?;
    }
    if records.is_empty() {
        w.write_record(
            ["dataset", "method", "trial", "fold", "seed"]
                .into_iter()
                .chain(METRIC_NAMES)
                .chain(["best_costs", WALL_TIME_COLUMN]),
        )?;
    }
    w.flush().map_err(|e| BenchError::io("<csv output>", e))?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize::<Row>().map(|row| RunRecord::try_from(row?)).collect()
}

pub fn records_to_string(records: &[RunRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_records(&mut buf, records)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Drops the wall-time column from CSV text so that two runs can be compared
/// byte for byte.
pub fn strip_wall_time(csv_text: &str) -> Result<String> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(csv_text.as_bytes());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut skip = None;
    for rec in r.records() {
        let rec = rec?;
        let skip = *skip.get_or_insert_with(|| rec.iter().position(|f| f == WALL_TIME_COLUMN));
        w.write_record(rec.iter().enumerate().filter(|(i, _)| Some(*i) != skip).map(|(_, f)| f))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| BenchError::io("<csv output>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
