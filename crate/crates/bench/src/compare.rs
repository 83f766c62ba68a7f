//! Control-vs-rival comparison: win/lose/draw counts, Wilcoxon tests with
//! Holm correction, and average ranks.
//!
//! Across data sets every method is represented by its mean score per data
//! set. Within a data set, runs are paired by `(trial, fold)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Write;

use ecsdbn_core::matrix::Matrix;
use ecsdbn_core::stats::{average_rank, holm_adjusted, holm_posthoc, wilcoxon_signed_rank, PairedSample, TestResult};

use crate::error::{BenchError, Result};
use crate::record::{RunRecord, METRIC_NAMES};

#[derive(Clone, Debug, PartialEq)]
pub struct RivalResult {
    pub method: String,
    /// Data sets where the control's mean is higher, lower, equal.
    pub wins: usize,
    pub losses: usize,
    pub draws: usize,
    /// Wilcoxon p over per-data-set means; 1 when every difference is zero.
    pub p_value: f64,
    pub p_holm: f64,
    pub significant: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricComparison {
    pub metric: String,
    pub methods: Vec<String>,
    /// Mean rank per method, aligned with `methods`; 1 is best.
    pub average_ranks: Vec<f64>,
    pub rivals: Vec<RivalResult>,
}

/// Run-level Wilcoxon test of the control against one rival on one data set.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetTest {
    pub dataset: String,
    pub metric: String,
    pub rival: String,
    pub control_mean: f64,
    pub rival_mean: f64,
    pub pairs: usize,
    /// `None` when every paired difference is zero.
    pub test: Option<TestResult>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareReport {
    pub control: String,
    pub alpha: f64,
    pub datasets: Vec<String>,
    pub metrics: Vec<MetricComparison>,
    pub per_dataset: Vec<DatasetTest>,
}

fn fmt_p(p: f64) -> String {
    if p < 1e-4 {
        format!("{p:.1e}")
    } else {
        format!("{p:.4}")
    }
}

fn metric_of(r: &RunRecord, metric: &str) -> f64 {
    r.metrics.get(metric).expect("metric names are checked")
}

/// Pairs the control's and the rival's runs on `dataset` by `(trial, fold)`
/// and runs the Wilcoxon signed-rank test on `metric`.
pub fn paired_run_test(
    records: &[RunRecord],
    dataset: &str,
    control: &str,
    rival: &str,
    metric: &str,
    alpha: f64,
) -> Result<(usize, Option<TestResult>)> {
    if !METRIC_NAMES.contains(&metric) {
        return Err(BenchError::Config(format!("unknown metric {metric:?}")));
    }
    let runs = |method: &str| -> BTreeMap<(usize, usize), f64> {
        records
            .iter()
            .filter(|r| r.dataset == dataset && r.method == method)
            .map(|r| ((r.trial, r.fold), metric_of(r, metric)))
            .collect()
    };
    let a = runs(control);
    let b = runs(rival);
    let (xs, ys): (Vec<f64>, Vec<f64>) = a.iter().filter_map(|(k, &x)| b.get(k).map(|&y| (x, y))).unzip();
    if xs.is_empty() {
        return Err(BenchError::Config(format!(
            "{dataset}: no paired runs for {control} and {rival}"
        )));
    }
    let n = xs.len();
    let sample = PairedSample::new(xs, ys)?;
    match wilcoxon_signed_rank(&sample, alpha) {
        Ok(t) => Ok((n, Some(t))),
        Err(ecsdbn_core::Error::Degenerate(_)) => Ok((n, None)),
        Err(e) => Err(e.into()),
    }
}

pub fn compare(records: &[RunRecord], control: &str, alpha: f64) -> Result<CompareReport> {
    let methods: Vec<String> = records
        .iter()
        .map(|r| r.method.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if methods.len() < 2 {
        return Err(BenchError::Config("comparison needs at least two methods".into()));
    }
    if !methods.iter().any(|m| m == control) {
        return Err(BenchError::Config(format!("control method {control:?} has no records")));
    }
    // datasets covered by every method, in first-appearance order
    let mut datasets: Vec<String> = Vec::new();
    for r in records {
        if !datasets.contains(&r.dataset) {
            datasets.push(r.dataset.clone());
        }
    }
    let covered = |d: &str| {
        methods
            .iter()
            .all(|m| records.iter().any(|r| r.dataset == d && &r.method == m))
    };
    let (kept, dropped): (Vec<String>, Vec<String>) = datasets.into_iter().partition(|d| covered(d));
    if !dropped.is_empty() {
        log::warn!("comparing on the common data sets only; dropped {}", dropped.join(", "));
    }
    if kept.is_empty() {
        return Err(BenchError::Config("no data set has records for every method".into()));
    }

    let mean = |d: &str, m: &str, metric: &str| {
        let v: Vec<f64> = records
            .iter()
            .filter(|r| r.dataset == d && r.method == m)
            .map(|r| metric_of(r, metric))
            .collect();
        crate::aggregate::mean_std(&v).0
    };
    let rivals: Vec<&String> = methods.iter().filter(|m| *m != control).collect();

    let mut metrics = Vec::new();
    let mut per_dataset = Vec::new();
    for metric in METRIC_NAMES {
        let scores = Matrix::from_fn(methods.len(), kept.len(), |m, d| mean(&kept[d], &methods[m], metric));
        let average_ranks = average_rank(&scores, true)?;
        let c = methods.iter().position(|m| m == control).expect("checked above");
        let mut results = Vec::new();
        for rival in &rivals {
            let r = methods.iter().position(|m| m == *rival).expect("from methods");
            let (mut wins, mut losses, mut draws) = (0, 0, 0);
            for d in 0..kept.len() {
                match scores.get(c, d).total_cmp(&scores.get(r, d)) {
                    std::cmp::Ordering::Greater => wins += 1,
                    std::cmp::Ordering::Less => losses += 1,
                    std::cmp::Ordering::Equal => draws += 1,
                }
            }
            let sample = PairedSample::new(scores.row(c).to_vec(), scores.row(r).to_vec())?;
            let p_value = match wilcoxon_signed_rank(&sample, alpha) {
                Ok(t) => t.p_value,
                Err(ecsdbn_core::Error::Degenerate(_)) => 1.0,
                Err(e) => return Err(e.into()),
            };
            results.push(RivalResult {
                method: (*rival).clone(),
                wins,
                losses,
                draws,
                p_value,
                p_holm: p_value,
                significant: false,
            });
        }
        let p: Vec<f64> = results.iter().map(|r| r.p_value).collect();
        let adjusted = holm_adjusted(&p);
        let reject = holm_posthoc(&p, alpha)?;
        for ((res, adj), rej) in results.iter_mut().zip(adjusted).zip(reject) {
            res.p_holm = adj;
            res.significant = rej;
        }
        for d in &kept {
            for rival in &rivals {
                let (pairs, test) = paired_run_test(records, d, control, rival, metric, alpha)?;
                per_dataset.push(DatasetTest {
                    dataset: d.clone(),
                    metric: metric.to_string(),
                    rival: (*rival).clone(),
                    control_mean: mean(d, control, metric),
                    rival_mean: mean(d, rival, metric),
                    pairs,
                    test,
                });
            }
        }
        metrics.push(MetricComparison {
            metric: metric.to_string(),
            methods: methods.clone(),
            average_ranks,
            rivals: results,
        });
    }
    Ok(CompareReport {
        control: control.to_string(),
        alpha,
        datasets: kept,
        metrics,
        per_dataset,
    })
}

impl CompareReport {
    /// One row per (metric, method): average rank, and for rivals the
    /// counts and p-values against the control.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "metric",
            "method",
            "average_rank",
            "wins",
            "losses",
            "draws",
            "p_value",
            "p_holm",
            "significant",
        ])?;
        for mc in &self.metrics {
            for (method, rank) in mc.methods.iter().zip(&mc.average_ranks) {
                let rival = mc.rivals.iter().find(|r| &r.method == method);
                let row = match rival {
                    Some(r) => vec![
                        mc.metric.clone(),
                        method.clone(),
                        rank.to_string(),
                        r.wins.to_string(),
                        r.losses.to_string(),
                        r.draws.to_string(),
                        r.p_value.to_string(),
                        r.p_holm.to_string(),
                        r.significant.to_string(),
                    ],
                    None => {
                        let mut row = vec![mc.metric.clone(), method.clone(), rank.to_string()];
                        row.extend(std::iter::repeat(String::new()).take(6));
                        row
                    }
                };
                w.write_record(&row)?;
            }
        }
        w.flush().map_err(|e| BenchError::io("<csv output>", e))?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "control: {}  alpha: {}  data sets ({}): {}",
            self.control,
            self.alpha,
            self.datasets.len(),
            self.datasets.join(", ")
        );
        for mc in &self.metrics {
            let _ = writeln!(out, "\n[{}]", mc.metric);
            let _ = writeln!(out, "  average rank:");
            for (m, r) in mc.methods.iter().zip(&mc.average_ranks) {
                let _ = writeln!(out, "    {m:<12} {r:.3}");
            }
            for r in &mc.rivals {
                let _ = writeln!(
                    out,
                    "  vs {:<10} win/lose/draw {}/{}/{}  p={}  holm p={}  {}",
                    r.method,
                    r.wins,
                    r.losses,
                    r.draws,
                    fmt_p(r.p_value),
                    fmt_p(r.p_holm),
                    if r.significant {
                        "significant"
                    } else {
                        "not significant"
                    }
                );
            }
            for t in self.per_dataset.iter().filter(|t| t.metric == mc.metric) {
                let p = t
                    .test
                    .map_or("all ties".to_string(), |t| format!("p={}", fmt_p(t.p_value)));
                let _ = writeln!(
                    out,
                    "    {:<16} {:.4} vs {:.4} ({} runs, {})",
                    t.dataset, t.control_mean, t.rival_mean, t.pairs, p
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::Metrics;

    fn rec(dataset: &str, method: &str, trial: usize, score: f64) -> RunRecord {
        RunRecord {
            dataset: dataset.into(),
            method: method.into(),
            trial,
            fold: 0,
            seed: 0,
            metrics: Metrics::from_values([score; 6]),
            wall_time_s: 0.0,
            best_costs: None,
        }
    }

    #[test]
    fn dominance() {
        let mut rs = Vec::new();
        for (i, d) in ["a", "b", "c", "d", "e", "f"].iter().enumerate() {
            rs.push(rec(d, "ctl", 0, 0.9 - i as f64 * 0.01));
            rs.push(rec(d, "riv", 0, 0.5 - i as f64 * 0.02));
        }
        let report = compare(&rs, "ctl", 0.05).unwrap();
        let g = report.metrics.iter().find(|m| m.metric == "gmean").unwrap();
        assert_eq!(g.rivals[0].wins, 6);
        assert_eq!(g.rivals[0].p_value, 2.0 / 64.0);
        assert!(g.rivals[0].significant);
        assert_eq!(g.average_ranks, vec![1.0, 2.0]);
    }

    #[test]
    fn identical_scores_are_draws() {
        let rs: Vec<RunRecord> = ["a", "b", "c"]
            .iter()
            .flat_map(|d| [rec(d, "x", 0, 0.5), rec(d, "y", 0, 0.5)])
            .collect();
        let report = compare(&rs, "x", 0.05).unwrap();
        let g = &report.metrics[1];
        assert_eq!((g.rivals[0].wins, g.rivals[0].losses, g.rivals[0].draws), (0, 0, 3));
        assert_eq!(g.rivals[0].p_value, 1.0);
        assert!(!g.rivals[0].significant);
        assert_eq!(g.average_ranks, vec![1.5, 1.5]);
        assert!(report.per_dataset.iter().all(|t| t.test.is_none()));
    }

    #[test]
    fn three_methods_hand_ranked() {
        // d1: a > b > c; d2: b > a = c; d3: c > b > a
        let rs = vec![
            rec("d1", "a", 0, 0.9),
            rec("d1", "b", 0, 0.8),
            rec("d1", "c", 0, 0.7),
            rec("d2", "a", 0, 0.5),
            rec("d2", "b", 0, 0.6),
            rec("d2", "c", 0, 0.5),
            rec("d3", "a", 0, 0.1),
            rec("d3", "b", 0, 0.2),
            rec("d3", "c", 0, 0.3),
        ];
        let report = compare(&rs, "a", 0.05).unwrap();
        let ranks = &report.metrics[0].average_ranks;
        let expected = [
            (1.0 + 2.5 + 3.0) / 3.0,
            (2.0 + 1.0 + 2.0) / 3.0,
            (3.0 + 2.5 + 1.0) / 3.0,
        ];
        for (r, e) in ranks.iter().zip(expected) {
            assert!((r - e).abs() < 1e-12);
        }
    }

    #[test]
    fn uncovered_datasets_are_dropped() {
        let rs = vec![rec("a", "x", 0, 0.9), rec("a", "y", 0, 0.1), rec("b", "x", 0, 0.9)];
        let report = compare(&rs, "x", 0.05).unwrap();
        assert_eq!(report.datasets, vec!["a"]);
    }

    #[test]
    fn needs_two_methods_and_a_known_control() {
        assert!(compare(&[rec("a", "x", 0, 0.1)], "x", 0.05).is_err());
        assert!(compare(&[rec("a", "x", 0, 0.1), rec("a", "y", 0, 0.2)], "z", 0.05).is_err());
    }

    #[test]
    fn run_pairs_follow_trial_and_fold() {
        let rs: Vec<RunRecord> = (0..8)
            .flat_map(|t| [rec("a", "x", t, 0.5 + t as f64 * 0.01), rec("a", "y", t, 0.4)])
            .collect();
        let (n, test) = paired_run_test(&rs, "a", "x", "y", "gmean", 0.05).unwrap();
        assert_eq!(n, 8);
        let t = test.unwrap();
        assert_eq!(t.p_value, 2.0 / 256.0);
    }
}
