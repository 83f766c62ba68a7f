//! Metrics and statistical tests checked against from-definition oracles.

use ecsdbn_core::matrix::Matrix;
use ecsdbn_core::metrics::{accuracy, auc, confusion, f1, gmean, precision, recall, ConfusionMatrix};
use ecsdbn_core::rng::RngStream;
use ecsdbn_core::stats::{average_rank, holm_posthoc, wilcoxon_signed_rank, PairedSample};
use proptest::prelude::*;

/// Binary metrics straight from the TP/FP/FN/TN formulas.
fn oracle_binary(tp: u64, fp: u64, fn_: u64, tn: u64) -> [f64; 5] {
    let (tp, fp, fn_, tn) = (tp as f64, fp as f64, fn_ as f64, tn as f64);
    let acc = (tp + tn) / (tp + fp + fn_ + tn);
    let sens = tp / (tp + fn_);
    let spec = tn / (tn + fp);
    let gm = (sens * spec).sqrt();
    let p = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
    let r = sens;
    let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    [acc, gm, p, r, f]
}

fn pairwise_auc(y: &[usize], s: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut pairs = 0.0;
    for i in 0..y.len() {
        for j in 0..y.len() {
            if y[i] == 1 && y[j] == 0 {
                pairs += 1.0;
                if s[i] > s[j] {
                    num += 1.0;
                } else if s[i] == s[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / pairs
}

/// Two-sided exact p by visiting all 2^n sign assignments.
fn brute_force_wilcoxon_p(diffs: &[f64]) -> f64 {
    let nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let n = nz.len();
    // midranks of |d| by counting
    let abs: Vec<f64> = nz.iter().map(|d| d.abs()).collect();
    let ranks: Vec<f64> = abs
        .iter()
        .map(|&a| {
            let less = abs.iter().filter(|&&b| b < a).count() as f64;
            let equal = abs.iter().filter(|&&b| b == a).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect();
    let total: f64 = ranks.iter().sum();
    let w_plus: f64 = ranks.iter().zip(&nz).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
    let observed = w_plus.min(total - w_plus);
    let mut hits = 0u64;
    for mask in 0u32..(1 << n) {
        let wp: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
        if wp.min(total - wp) <= observed + 1e-9 {
            hits += 1;
        }
    }
    hits as f64 / (1u64 << n) as f64
}

#[test]
fn binary_metrics_match_oracle_on_random_tables() {
    let mut rng = RngStream::new(2024, 1);
    for _ in 0..1000 {
        let tp = rng.below(60) as u64 + 1;
        let fn_ = rng.below(60) as u64;
        let tn = rng.below(200) as u64 + 1;
        let fp = rng.below(60) as u64;
        let cm = ConfusionMatrix::binary(tp, fp, fn_, tn);
        let expected = oracle_binary(tp, fp, fn_, tn);
        let got = [
            accuracy(&cm).unwrap(),
            gmean(&cm).unwrap(),
            precision(&cm, 1).value,
            recall(&cm, 1).value,
            f1(&cm, 1).value,
        ];
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-12, "{got:?} vs {expected:?}");
        }
    }
}

#[test]
fn auc_matches_pairwise_count() {
    let mut rng = RngStream::new(7, 2);
    for case in 0..200 {
        let n = 4 + rng.below(40);
        let mut y: Vec<usize> = (0..n).map(|_| rng.below(2)).collect();
        y[0] = 0;
        y[1] = 1;
        // coarse scores so that ties happen
        let s: Vec<f64> = (0..n).map(|_| (rng.below(10) as f64) / 10.0).collect();
        let a = auc(&y, &s, 1).unwrap();
        assert!((a - pairwise_auc(&y, &s)).abs() < 1e-12, "case {case}");
    }
    // four-sample hand case
    let y = [1, 0, 1, 0];
    let s = [0.8, 0.3, 0.3, 0.1];
    assert!((auc(&y, &s, 1).unwrap() - pairwise_auc(&y, &s)).abs() < 1e-12);
    assert!((auc(&y, &s, 1).unwrap() - 0.875).abs() < 1e-12);
}

#[test]
fn wilcoxon_matches_sign_enumeration() {
    let mut rng = RngStream::new(99, 3);
    for _ in 0..100 {
        let n = 1 + rng.below(10);
        // integer-valued differences produce ties among |d|
        let a: Vec<f64> = (0..n).map(|_| rng.below(9) as f64 - 4.0).collect();
        let b = vec![0.0; n];
        if a.iter().all(|&d| d == 0.0) {
            continue;
        }
        let r = wilcoxon_signed_rank(&PairedSample::new(a.clone(), b).unwrap(), 0.05).unwrap();
        let oracle = brute_force_wilcoxon_p(&a);
        assert!((r.p_value - oracle).abs() < 1e-12, "{a:?}: {} vs {oracle}", r.p_value);
    }
}

#[test]
fn holm_fixtures() {
    // hand-executed step-down: thresholds 0.05/3, 0.05/2, 0.05/1
    let fixtures: [(&[f64], &[bool]); 3] = [
        (&[0.01, 0.04, 0.03], &[true, false, false]),
        (&[0.001, 0.02, 0.04], &[true, true, true]),
        (&[0.02, 0.001, 0.3, 0.012], &[true, true, false, true]),
    ];
    for (p, expected) in fixtures {
        assert_eq!(holm_posthoc(p, 0.05).unwrap(), expected, "{p:?}");
    }
}

#[test]
fn average_ranks_match_sort_oracle() {
    let mut rng = RngStream::new(5, 4);
    let scores = Matrix::from_fn(7, 3, |_, _| (rng.below(5) as f64) / 4.0);
    let ranks = average_rank(&scores, true).unwrap();
    let mut expected = vec![0.0; 7];
    for d in 0..3 {
        let mut column: Vec<(f64, usize)> = (0..7).map(|m| (scores.get(m, d), m)).collect();
        column.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut i = 0;
        while i < 7 {
            let mut j = i;
            while j < 7 && column[j].0 == column[i].0 {
                j += 1;
            }
            let shared = (i + 1 + j) as f64 / 2.0;
            for item in &column[i..j] {
                expected[item.1] += shared / 3.0;
            }
            i = j;
        }
    }
    for (r, e) in ranks.iter().zip(&expected) {
        assert!((r - e).abs() < 1e-12);
    }
}

fn binary_labels() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (2usize..80).prop_flat_map(|n| {
        (
            proptest::collection::vec(0usize..2, n),
            proptest::collection::vec(0usize..2, n),
        )
    })
}

proptest! {
    #[test]
    fn metrics_lie_in_unit_interval((y, p) in binary_labels()) {
        let cm = confusion(&y, &p, 2).unwrap();
        prop_assert!((0.0..=1.0).contains(&accuracy(&cm).unwrap()));
        for s in [precision(&cm, 1), recall(&cm, 1), f1(&cm, 1)] {
            prop_assert!((0.0..=1.0).contains(&s.value));
        }
        if let Ok(g) = gmean(&cm) {
            prop_assert!((0.0..=1.0).contains(&g));
            let recalls = cm.class_recalls();
            let some_zero = recalls.contains(&Some(0.0));
            prop_assert_eq!(g == 0.0, some_zero);
        }
    }

    #[test]
    fn auc_reverses_under_negation(
        y in proptest::collection::vec(0usize..2, 4..40),
        seed in any::<u64>(),
    ) {
        prop_assume!(y.contains(&0) && y.contains(&1));
        let mut rng = RngStream::new(seed, 0);
        let s: Vec<f64> = (0..y.len()).map(|_| rng.next_unit()).collect();
        let neg: Vec<f64> = s.iter().map(|v| -v).collect();
        let total = auc(&y, &s, 1).unwrap() + auc(&y, &neg, 1).unwrap();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn holm_rejects_subset_of_unadjusted(p in proptest::collection::vec(0.0f64..=1.0, 1..12)) {
        let holm = holm_posthoc(&p, 0.05).unwrap();
        for (r, pv) in holm.iter().zip(&p) {
            if *r {
                prop_assert!(*pv <= 0.05);
            }
        }
    }

    #[test]
    fn ranks_sum_to_triangular_number(
        m in 1usize..8,
        d in 1usize..6,
        seed in any::<u64>(),
    ) {
        let mut rng = RngStream::new(seed, 1);
        let scores = Matrix::from_fn(m, d, |_, _| rng.below(4) as f64);
        let ranks = average_rank(&scores, true).unwrap();
        let total: f64 = ranks.iter().sum();
        prop_assert!((total - (m * (m + 1)) as f64 / 2.0).abs() < 1e-9);
    }
}
