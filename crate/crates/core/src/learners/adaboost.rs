//! AdaBoost.M1 over weighted decision stumps, by instance reweighting.

use serde::{Deserialize, Serialize};

use super::{Dataset, Prediction};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaBoostParams {
    pub rounds: usize,
}

impl Default for AdaBoostParams {
    fn default() -> Self {
        Self { rounds: 10 }
    }
}

/// `x[feature] <= threshold` predicts `below`, otherwise `!below`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    #[serde(with = "super::extended_float")]
    pub threshold: f64,
    pub below: bool,
}

impl Stump {
    pub fn predict(&self, x: &[f64]) -> bool {
        if x[self.feature] <= self.threshold {
            self.below
        } else {
            !self.below
        }
    }

    /// Minimum weighted-error stump. Ties keep the lowest feature index and
    /// threshold.
    pub fn fit(rows: &[Vec<f64>], labels: &[bool], weights: &[f64]) -> (Self, f64) {
        let d = rows[0].len();
        let total: f64 = weights.iter().sum();
        let total_pos: f64 = labels
            .iter()
            .zip(weights)
            .filter(|(l, _)| **l)
            .map(|(_, w)| w)
            .sum();
        let mut order: Vec<usize> = (0..rows.len()).collect();
        let mut best = (
            Stump {
                feature: 0,
                threshold: f64::INFINITY,
                below: total_pos >= total - total_pos,
            },
            total_pos.min(total - total_pos),
        );
        for f in 0..d {
            order.sort_by(|&a, &b| rows[a][f].total_cmp(&rows[b][f]).then(a.cmp(&b)));
            let mut left_pos = 0.0;
            let mut left_w = 0.0;
            for w in 0..order.len() - 1 {
                let i = order[w];
                left_w += weights[i];
                if labels[i] {
                    left_pos += weights[i];
                }
                let (v, next) = (rows[i][f], rows[order[w + 1]][f]);
                if next <= v {
                    continue;
                }
                let left_neg = left_w - left_pos;
                let right_pos = total_pos - left_pos;
                let right_neg = (total - left_w) - right_pos;
                // below -> positive: errors are left negatives + right positives
                let err_pos_below = left_neg + right_pos;
                let err_neg_below = left_pos + right_neg;
                let (err, below) = if err_pos_below <= err_neg_below {
                    (err_pos_below, true)
                } else {
                    (err_neg_below, false)
                };
                if err < best.1 - 1e-15 {
                    best = (
                        Stump {
                            feature: f,
                            threshold: v + (next - v) / 2.0,
                            below,
                        },
                        err,
                    );
                }
            }
        }
        (best.0, best.1 / total)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoost {
    pub stumps: Vec<Stump>,
    pub alphas: Vec<f64>,
}

/// Per-round diagnostics recorded during training.
#[derive(Debug, Clone, Default)]
pub struct BoostTrace {
    /// Sum of instance weights after each renormalization.
    pub weight_sums: Vec<f64>,
    /// Ensemble training error after each round.
    pub training_errors: Vec<f64>,
}

impl AdaBoost {
    pub fn fit(dataset: &Dataset, params: &AdaBoostParams) -> Result<Self> {
        Ok(Self::fit_traced(dataset, params)?.0)
    }

    pub fn fit_traced(dataset: &Dataset, params: &AdaBoostParams) -> Result<(Self, BoostTrace)> {
        dataset.check_trainable()?;
        let n = dataset.len();
        let (rows, labels) = (&dataset.rows, &dataset.labels);
        let mut weights = vec![1.0 / n as f64; n];
        let mut model = AdaBoost {
            stumps: Vec::new(),
            alphas: Vec::new(),
        };
        let mut trace = BoostTrace::default();
        for round in 0..params.rounds.max(1) {
            let (stump, err) = Stump::fit(rows, labels, &weights);
            if err >= 0.5 || err <= 0.0 {
                // a perfect or useless first learner is kept on its own
                if round == 0 {
                    model.stumps.push(stump);
                    model.alphas.push(1.0);
                    trace.training_errors.push(model.training_error(dataset));
                }
                break;
            }
            let beta = err / (1.0 - err);
            for (i, w) in weights.iter_mut().enumerate() {
                if stump.predict(&rows[i]) == labels[i] {
                    *w *= beta;
                }
            }
            let sum: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= sum);
            trace.weight_sums.push(weights.iter().sum());
            model.stumps.push(stump);
            model.alphas.push((1.0 / beta).ln());
            trace.training_errors.push(model.training_error(dataset));
        }
        Ok((model, trace))
    }

    fn training_error(&self, dataset: &Dataset) -> f64 {
        let wrong = dataset
            .rows
            .iter()
            .zip(&dataset.labels)
            .filter(|(x, &y)| self.predict(x).positive != y)
            .count();
        wrong as f64 / dataset.len() as f64
    }

    /// Weighted vote; the score is the winning label's share of the total
    /// vote weight.
    pub fn predict(&self, x: &[f64]) -> Prediction {
        let total: f64 = self.alphas.iter().sum();
        let pos: f64 = self
            .stumps
            .iter()
            .zip(&self.alphas)
            .filter(|(s, _)| s.predict(x))
            .map(|(_, a)| a)
            .sum();
        Prediction::from_probability(if total > 0.0 { pos / total } else { 0.5 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stump_finds_perfect_threshold() {
        let rows = vec![vec![0.0, 5.0], vec![1.0, 4.0], vec![2.0, 1.0], vec![3.0, 0.0]];
        let labels = vec![false, false, true, true];
        let (s, err) = Stump::fit(&rows, &labels, &[0.25; 4]);
        assert_eq!(err, 0.0);
        assert_eq!(s.feature, 0);
        assert_eq!(s.threshold, 1.5);
        assert!(!s.below);
    }
}
