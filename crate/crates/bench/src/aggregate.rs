//! Mean ± sample standard deviation per (data set, method).

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{BenchError, Result};
use crate::record::{Metrics, RunRecord, METRIC_NAMES};

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub dataset: String,
    pub method: String,
    pub runs: usize,
    pub mean: Metrics,
    /// Sample standard deviation (n − 1 denominator); 0 for a single run.
    pub std: Metrics,
    pub mean_wall_time_s: f64,
}

/// Mean and sample standard deviation. Values are summed in sorted order so
/// the result does not depend on input order.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let mut sq: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    sq.sort_by(f64::total_cmp);
    (mean, (sq.iter().sum::<f64>() / (n - 1.0)).sqrt())
}

/// One summary per (data set, method) cell, sorted by data set then method.
pub fn aggregate(records: &[RunRecord]) -> Result<Vec<Summary>> {
    if records.is_empty() {
        return Err(BenchError::Config("nothing to aggregate: no run records".into()));
    }
    let mut cells: BTreeMap<(&str, &str), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        cells
            .entry((r.dataset.as_str(), r.method.as_str()))
            .or_default()
            .push(r);
    }
    Ok(cells
        .into_iter()
        .map(|((dataset, method), runs)| {
            let mut mean = [0.0; 6];
            let mut std = [0.0; 6];
            for m in 0..6 {
                let column: Vec<f64> = runs.iter().map(|r| r.metrics.values()[m]).collect();
                (mean[m], std[m]) = mean_std(&column);
            }
            let times: Vec<f64> = runs.iter().map(|r| r.wall_time_s).collect();
            Summary {
                dataset: dataset.to_string(),
                method: method.to_string(),
                runs: runs.len(),
                mean: Metrics::from_values(mean),
                std: Metrics::from_values(std),
                mean_wall_time_s: mean_std(&times).0,
            }
        })
        .collect())
}

pub fn write_summaries<W: Write>(out: W, summaries: &[Summary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["dataset".to_string(), "method".to_string(), "runs".to_string()];
    for m in METRIC_NAMES {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_std"));
    }
    header.push("wall_time_s_mean".into());
    w.write_record(&header)?;
    for s in summaries {
        let mut row = vec![s.dataset.clone(), s.method.clone(), s.runs.to_string()];
        for (mean, std) in s.mean.values().iter().zip(s.std.values()) {
            row.push(mean.to_string());
            row.push(std.to_string());
        }
        row.push(s.mean_wall_time_s.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| BenchError::io("<csv output>", e))?;
    Ok(())
}

/// Data sets as rows, methods as columns, `mean±std` cells for one metric.
pub fn format_table(summaries: &[Summary], metric: &str) -> String {
    let mut methods: Vec<&str> = summaries.iter().map(|s| s.method.as_str()).collect();
    methods.sort();
    methods.dedup();
    let mut datasets: Vec<&str> = summaries.iter().map(|s| s.dataset.as_str()).collect();
    datasets.dedup();
    let name_width = datasets.iter().map(|d| d.len()).max().unwrap_or(0).max(7);
    let mut out = format!("{metric}\n{:<name_width$}", "dataset");
    for m in &methods {
        out.push_str(&format!("  {m:>15}"));
    }
    out.push('\n');
    for d in datasets {
        out.push_str(&format!("{d:<name_width$}"));
        for m in &methods {
            let cell = summaries
                .iter()
                .find(|s| s.dataset == d && s.method == *m)
                .map(|s| {
                    format!(
                        "{:.4}±{:.4}",
                        s.mean.get(metric).unwrap_or(f64::NAN),
                        s.std.get(metric).unwrap_or(f64::NAN)
                    )
                })
                .unwrap_or_else(|| "-".into());
            out.push_str(&format!("  {cell:>15}"));
        }
        out.push('\n');
    }
    out
}
