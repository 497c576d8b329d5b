//! Subject-wise k-fold cross-validation and confusion metrics.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{self, Algorithm, Dataset, TrainConfig};

/// Assignment of every subject to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: BTreeMap<String, usize>,
}

impl FoldPlan {
    pub fn fold_of(&self, subject: &str) -> Option<usize> {
        self.assignments.get(subject).copied()
    }

    /// Row indices (train, test) of fold `f`.
    pub fn split(&self, dataset: &Dataset, f: usize) -> (Vec<usize>, Vec<usize>) {
        (0..dataset.len()).partition(|&i| self.fold_of(&dataset.groups[i]) != Some(f))
    }
}

/// Shuffles subjects with `seed`, then hands each to the fold currently
/// holding the fewest rows (lowest index on ties).
pub fn make_subject_folds(dataset: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidArgument("need at least 2 folds".into()));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for g in &dataset.groups {
        *counts.entry(g.as_str()).or_default() += 1;
    }
    if counts.len() < k {
        return Err(Error::InvalidArgument(format!(
            "{} subjects cannot fill {k} folds",
            counts.len()
        )));
    }
    let mut subjects: Vec<(&str, usize)> = counts.into_iter().collect();
    subjects.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut load = vec![0usize; k];
    let mut assignments = BTreeMap::new();
    for (s, n) in subjects {
        let f = (0..k).min_by_key(|&f| (load[f], f)).unwrap();
        load[f] += n;
        assignments.insert(s.to_string(), f);
    }
    Ok(FoldPlan { k, assignments })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        Self {
            tp,
            fp,
            tn,
            fn_,
            accuracy: ratio(tp + tn, tp + tn + fp + fn_),
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    fn add(&self, o: &Metrics) -> Metrics {
        Metrics::from_counts(self.tp + o.tp, self.fp + o.fp, self.tn + o.tn, self.fn_ + o.fn_)
    }
}

/// Confusion metrics over `(predicted, actual)` pairs with `true` as the
/// positive class.
pub fn confusion_metrics(pairs: &[(bool, bool)]) -> Result<Metrics> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for &(p, a) in pairs {
        match (p, a) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    Ok(Metrics::from_counts(tp, fp, tn, fn_))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub metrics: Metrics,
    pub train_rows: usize,
    pub test_subjects: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub dataset: String,
    pub folds: Vec<FoldResult>,
    pub pooled: Metrics,
    /// Folds skipped because their training split had a single class.
    pub skipped_folds: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Trains on all subjects outside each fold and tests on the fold.
/// Aggregate metrics pool the confusion counts of all evaluated folds.
pub fn cross_validate(
    dataset: &Dataset,
    config: &TrainConfig,
    plan: &FoldPlan,
    descriptor: &str,
) -> Result<CvReport> {
    if dataset.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(g) = dataset.groups.iter().find(|g| plan.fold_of(g).is_none()) {
        return Err(Error::InvalidArgument(format!(
            "subject {g:?} is not covered by the fold plan"
        )));
    }
    let outcomes: Vec<Result<std::result::Result<FoldResult, String>>> = (0..plan.k)
        .into_par_iter()
        .map(|f| {
            let (train_idx, test_idx) = plan.split(dataset, f);
            let train_subjects: BTreeSet<&str> =
                train_idx.iter().map(|&i| dataset.groups[i].as_str()).collect();
            let test_subjects: BTreeSet<&str> =
                test_idx.iter().map(|&i| dataset.groups[i].as_str()).collect();
            assert!(
                train_subjects.is_disjoint(&test_subjects),
                "subject leaked across fold {f}"
            );
            if test_idx.is_empty() {
                return Ok(Err(format!("fold {f} has no test rows")));
            }
            let train = dataset.subset(&train_idx);
            let model = match learners::train(&train, config) {
                Ok(m) => m,
                Err(Error::DegenerateLabels) => {
                    return Ok(Err(format!("fold {f} skipped: single-class training split")))
                }
                Err(e) => return Err(e),
            };
            let pairs: Vec<(bool, bool)> = test_idx
                .iter()
                .map(|&i| Ok((model.predict(&dataset.rows[i])?.positive, dataset.labels[i])))
                .collect::<Result<_>>()?;
            Ok(Ok(FoldResult {
                fold: f,
                metrics: confusion_metrics(&pairs)?,
                train_rows: train_idx.len(),
                test_subjects: test_subjects.into_iter().map(String::from).collect(),
            }))
        })
        .collect();

    let mut folds = Vec::new();
    let mut skipped = Vec::new();
    let mut warnings = Vec::new();
    for (f, o) in outcomes.into_iter().enumerate() {
        match o? {
            Ok(r) => folds.push(r),
            Err(w) => {
                skipped.push(f);
                warnings.push(w);
            }
        }
    }
    let pooled = folds
        .iter()
        .fold(Metrics::from_counts(0, 0, 0, 0), |acc, r| acc.add(&r.metrics));
    Ok(CvReport {
        algorithm: config.algorithm,
        seed: config.seed,
        dataset: descriptor.to_string(),
        folds,
        pooled,
        skipped_folds: skipped,
        warnings,
    })
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

fn metrics_json(m: &Metrics) -> serde_json::Value {
    serde_json::json!({
        "tp": m.tp,
        "fp": m.fp,
        "tn": m.tn,
        "fn": m.fn_,
        "accuracy": round4(m.accuracy),
        "precision": round4(m.precision),
        "recall": round4(m.recall),
    })
}

impl CvReport {
    /// Stable JSON layout; metric values rounded to four decimals.
    pub fn to_json(&self) -> serde_json::Value {
        let folds: Vec<serde_json::Value> = self
            .folds
            .iter()
            .map(|r| {
                let mut v = metrics_json(&r.metrics);
                v.as_object_mut()
                    .unwrap()
                    .insert("fold".into(), r.fold.into());
                v
            })
            .collect();
        serde_json::json!({
            "algorithm": self.algorithm.as_str(),
            "seed": self.seed,
            "dataset": self.dataset,
            "folds": folds,
            "pooled": metrics_json(&self.pooled),
            "skipped_folds": self.skipped_folds,
            "warnings": self.warnings,
        })
    }
}
