mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rehabkit::evaluation::*;
use rehabkit::features::FeatureSchema;
use rehabkit::learners::{Algorithm, Dataset, TrainConfig};

/// `counts[s]` rows for subject `s`, two well separated classes.
fn subjects_dataset(counts: &[usize], seed: u64) -> Dataset {
    let total: usize = counts.iter().sum();
    let (rows, labels) = blobs(total, 3, 5.0, seed);
    let groups = counts
        .iter()
        .enumerate()
        .flat_map(|(s, &c)| std::iter::repeat_n(format!("subject{s:02}"), c))
        .collect();
    Dataset::new(FeatureSchema::anonymous(3), rows, labels, groups).unwrap()
}

fn fold_loads(ds: &Dataset, plan: &FoldPlan) -> Vec<usize> {
    let mut load = vec![0; plan.k];
    for g in &ds.groups {
        load[plan.fold_of(g).unwrap()] += 1;
    }
    load
}

#[test]
fn equal_subjects_split_evenly() {
    let ds = subjects_dataset(&[6; 10], 1);
    for seed in 0..20 {
        let plan = make_subject_folds(&ds, 5, seed).unwrap();
        let mut per_fold = [0; 5];
        for f in plan.assignments.values() {
            per_fold[*f] += 1;
        }
        assert_eq!(per_fold, [2; 5]);
    }
}

#[test]
fn too_few_subjects_is_an_error() {
    let ds = subjects_dataset(&[5; 4], 1);
    assert!(make_subject_folds(&ds, 5, 0).is_err());
    assert!(make_subject_folds(&ds, 1, 0).is_err());
    assert!(make_subject_folds(&ds, 4, 0).is_ok());
}

#[test]
fn fifty_four_subjects_balance() {
    let mut r = rng(3);
    let counts: Vec<usize> = (0..54).map(|_| r.random_range(1..40)).collect();
    let ds = subjects_dataset(&counts, 2);
    let plan = make_subject_folds(&ds, 5, 11).unwrap();
    let load = fold_loads(&ds, &plan);
    let spread = load.iter().max().unwrap() - load.iter().min().unwrap();
    assert!(spread <= *counts.iter().max().unwrap(), "{load:?}");
    assert_eq!(plan.assignments.len(), 54);
}

/// Smallest achievable spread over every assignment of subjects to `k`
/// non-empty folds.
fn best_spread(counts: &[usize], k: usize) -> usize {
    let n = counts.len();
    let mut best = usize::MAX;
    for code in 0..k.pow(n as u32) {
        let mut c = code;
        let mut load = vec![0; k];
        let mut used = vec![false; k];
        for &w in counts {
            load[c % k] += w;
            used[c % k] = true;
            c /= k;
        }
        if used.iter().all(|u| *u) {
            best = best.min(load.iter().max().unwrap() - load.iter().min().unwrap());
        }
    }
    best
}

#[test]
fn greedy_balance_against_exhaustive_search() {
    let mut r = rng(4);
    for case in 0..200 {
        let k = r.random_range(2..=3);
        let n = r.random_range(k..=7);
        let counts: Vec<usize> = (0..n).map(|_| r.random_range(1..20)).collect();
        let ds = subjects_dataset(&counts, case);
        let plan = make_subject_folds(&ds, k, case).unwrap();
        let load = fold_loads(&ds, &plan);
        assert!(load.iter().all(|&l| l > 0));
        let spread = load.iter().max().unwrap() - load.iter().min().unwrap();
        let opt = best_spread(&counts, k);
        assert!(spread <= opt + counts.iter().max().unwrap(), "{counts:?} {load:?} opt {opt}");
    }
}

#[test]
fn confusion_examples() {
    let mut pairs = Vec::new();
    pairs.extend(std::iter::repeat_n((true, true), 8));
    pairs.extend(std::iter::repeat_n((true, false), 2));
    pairs.extend(std::iter::repeat_n((false, false), 8));
    pairs.extend(std::iter::repeat_n((false, true), 2));
    let m = confusion_metrics(&pairs).unwrap();
    assert_eq!((m.tp, m.fp, m.tn, m.fn_), (8, 2, 8, 2));
    assert_eq!((m.accuracy, m.precision, m.recall), (0.8, 0.8, 0.8));

    let m = confusion_metrics(&[(true, true), (false, false), (true, true)]).unwrap();
    assert_eq!((m.accuracy, m.precision, m.recall), (1.0, 1.0, 1.0));

    let m = confusion_metrics(&[(false, true), (false, false), (false, true)]).unwrap();
    assert_eq!((m.precision, m.recall), (0.0, 0.0));

    assert!(confusion_metrics(&[]).is_err());
}

fn pair_list() -> impl Strategy<Value = Vec<(bool, bool)>> {
    prop::collection::vec((any::<bool>(), any::<bool>()), 1..200)
}

proptest! {
    #[test]
    fn metrics_follow_definitions(pairs in pair_list()) {
        let m = confusion_metrics(&pairs).unwrap();
        let count = |p: bool, a: bool| pairs.iter().filter(|x| **x == (p, a)).count();
        let (tp, fp, tn, fn_) = (count(true, true), count(true, false), count(false, false), count(false, true));
        prop_assert_eq!((m.tp, m.fp, m.tn, m.fn_), (tp, fp, tn, fn_));
        prop_assert_eq!(m.accuracy, (tp + tn) as f64 / pairs.len() as f64);
        prop_assert_eq!(m.precision, if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 });
        prop_assert_eq!(m.recall, if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 });
        for v in [m.accuracy, m.precision, m.recall] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn metrics_ignore_order(pairs in pair_list(), seed in any::<u64>()) {
        let mut shuffled = pairs.clone();
        shuffled.shuffle(&mut rng(seed));
        prop_assert_eq!(confusion_metrics(&pairs).unwrap(), confusion_metrics(&shuffled).unwrap());
    }

    #[test]
    fn swapping_classes_swaps_counts(pairs in pair_list()) {
        let m = confusion_metrics(&pairs).unwrap();
        let flipped: Vec<(bool, bool)> = pairs.iter().map(|&(p, a)| (!p, !a)).collect();
        let s = confusion_metrics(&flipped).unwrap();
        prop_assert_eq!((s.tp, s.fp, s.tn, s.fn_), (m.tn, m.fn_, m.tp, m.fp));
        prop_assert_eq!(s.accuracy, m.accuracy);
        // precision/recall of the negative class
        prop_assert_eq!(s.precision, if m.tn + m.fn_ == 0 { 0.0 } else { m.tn as f64 / (m.tn + m.fn_) as f64 });
        prop_assert_eq!(s.recall, if m.tn + m.fp == 0 { 0.0 } else { m.tn as f64 / (m.tn + m.fp) as f64 });
    }

    #[test]
    fn folds_partition_subjects(counts in prop::collection::vec(1usize..15, 5..30), k in 2usize..6, seed in any::<u64>()) {
        prop_assume!(counts.len() >= k);
        let ds = subjects_dataset(&counts, 0);
        let plan = make_subject_folds(&ds, k, seed).unwrap();
        prop_assert_eq!(&plan, &make_subject_folds(&ds, k, seed).unwrap());
        let subjects: BTreeSet<&String> = ds.groups.iter().collect();
        prop_assert_eq!(plan.assignments.len(), subjects.len());
        let load = fold_loads(&ds, &plan);
        prop_assert!(load.iter().all(|&l| l > 0));
        let spread = load.iter().max().unwrap() - load.iter().min().unwrap();
        prop_assert!(spread <= *counts.iter().max().unwrap());
    }
}

fn unequal_dataset() -> Dataset {
    let mut r = rng(5);
    let counts: Vec<usize> = (0..12).map(|_| r.random_range(8..30)).collect();
    subjects_dataset(&counts, 6)
}

#[test]
fn folds_never_share_subjects_and_counts_pool() {
    let ds = unequal_dataset();
    let plan = make_subject_folds(&ds, 5, 2).unwrap();
    for algo in [Algorithm::Logistic, Algorithm::RandomForest, Algorithm::Hoeffding] {
        let report = cross_validate(&ds, &TrainConfig::new(algo, 1), &plan, "blobs").unwrap();
        assert_eq!(report.folds.len(), 5);
        let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
        for f in &report.folds {
            let (train, test) = plan.split(&ds, f.fold);
            let train_subjects: BTreeSet<&str> = train.iter().map(|&i| ds.groups[i].as_str()).collect();
            for s in &f.test_subjects {
                assert!(!train_subjects.contains(s.as_str()));
                *seen.entry(s.as_str()).or_default() += 1;
            }
            assert_eq!(f.train_rows, train.len());
            assert_eq!(f.metrics.total(), test.len());
        }
        assert!(seen.values().all(|&c| c == 1));
        let sum = |g: fn(&Metrics) -> usize| report.folds.iter().map(|f| g(&f.metrics)).sum::<usize>();
        let p = &report.pooled;
        assert_eq!((p.tp, p.fp, p.tn, p.fn_), (sum(|m| m.tp), sum(|m| m.fp), sum(|m| m.tn), sum(|m| m.fn_)));
        assert_eq!(p.total(), ds.len());
        // the streaming tree never sees a grace period's worth of rows here
        if algo != Algorithm::Hoeffding {
            assert!(p.accuracy >= 0.95, "{algo}: {}", p.accuracy);
        }
    }
}

#[test]
fn reports_are_deterministic() {
    let ds = unequal_dataset();
    let plan = make_subject_folds(&ds, 5, 9).unwrap();
    for algo in [Algorithm::RandomForest, Algorithm::Adaboost] {
        let cfg = TrainConfig::new(algo, 4);
        let a = cross_validate(&ds, &cfg, &plan, "blobs").unwrap();
        let b = cross_validate(&ds, &cfg, &plan, "blobs").unwrap();
        assert_eq!(a.to_json().to_string(), b.to_json().to_string());
        assert_eq!(a, b);
    }
}

#[test]
fn single_class_training_split_is_skipped() {
    // only subject00 carries positives, so the fold holding it trains on negatives alone
    let mut ds = subjects_dataset(&[10; 5], 7);
    for (l, g) in ds.labels.iter_mut().zip(&ds.groups) {
        *l = g == "subject00" && *l;
    }
    let plan = make_subject_folds(&ds, 5, 0).unwrap();
    let report = cross_validate(&ds, &TrainConfig::new(Algorithm::C45, 0), &plan, "x").unwrap();
    assert_eq!(report.skipped_folds, vec![plan.fold_of("subject00").unwrap()]);
    assert_eq!(report.warnings.len(), 1);
    assert_eq!(report.folds.len(), 4);
}

#[test]
fn plan_must_cover_every_subject() {
    let ds = subjects_dataset(&[5; 6], 1);
    let mut plan = make_subject_folds(&ds, 3, 0).unwrap();
    plan.assignments.remove("subject03");
    assert!(cross_validate(&ds, &TrainConfig::new(Algorithm::Logistic, 0), &plan, "x").is_err());
}
