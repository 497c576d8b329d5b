//! Very fast decision tree (Hoeffding tree) for a binary stream of numeric
//! attributes.
//!
//! Each leaf keeps, per attribute and class, a Gaussian summary of the
//! values it has seen. Every `grace_period` instances a leaf evaluates
//! candidate thresholds by information gain and splits once the gap
//! between the best and runner-up attribute exceeds the Hoeffding bound,
//! or the bound falls below the tie threshold.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use super::{Dataset, Prediction};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HoeffdingParams {
    /// Allowed probability of choosing the wrong split attribute.
    pub delta: f64,
    /// Tie threshold.
    pub tau: f64,
    pub grace_period: usize,
    /// Candidate thresholds evaluated per attribute.
    pub split_points: usize,
}

impl Default for HoeffdingParams {
    fn default() -> Self {
        Self {
            delta: 1e-7,
            tau: 0.05,
            grace_period: 200,
            split_points: 10,
        }
    }
}

/// `sqrt(range² ln(1/delta) / 2n)`.
pub fn hoeffding_bound(range: f64, delta: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("hoeffding bound needs n > 0".into()));
    }
    if !(delta > 0.0 && delta <= 1.0) || !(range > 0.0) {
        return Err(Error::InvalidArgument(
            "hoeffding bound needs range > 0 and delta in (0, 1]".into(),
        ));
    }
    Ok((range * range * (1.0 / delta).ln() / (2.0 * n as f64)).sqrt())
}

/// Running Gaussian summary (Welford) with observed extremes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianEstimator {
    pub weight: f64,
    pub mean: f64,
    pub m2: f64,
    #[serde(with = "super::extended_float")]
    pub min: f64,
    #[serde(with = "super::extended_float")]
    pub max: f64,
}

impl Default for GaussianEstimator {
    fn default() -> Self {
        Self {
            weight: 0.0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }
}

impl GaussianEstimator {
    fn add(&mut self, x: f64) {
        self.weight += 1.0;
        let d = x - self.mean;
        self.mean += d / self.weight;
        self.m2 += d * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    fn std_dev(&self) -> f64 {
        if self.weight > 1.0 {
            (self.m2 / (self.weight - 1.0)).max(0.0).sqrt()
        } else {
            0.0
        }
    }

    /// Estimated weight at or below `t`.
    fn weight_below(&self, t: f64) -> f64 {
        if self.weight == 0.0 || t < self.min {
            return 0.0;
        }
        if t >= self.max {
            return self.weight;
        }
        let sd = self.std_dev();
        if sd <= 0.0 {
            return if t >= self.mean { self.weight } else { 0.0 };
        }
        let z = (t - self.mean) / (sd * std::f64::consts::SQRT_2);
        self.weight * 0.5 * (1.0 + erf(z))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafStats {
    /// Weight seen per class: `[negative, positive]`.
    pub class_weight: [f64; 2],
    pub weight_at_last_check: f64,
    /// `observers[attribute][class]`.
    pub observers: Vec<[GaussianEstimator; 2]>,
}

impl LeafStats {
    fn new(n_features: usize, class_weight: [f64; 2]) -> Self {
        let total = class_weight[0] + class_weight[1];
        Self {
            class_weight,
            weight_at_last_check: total,
            observers: vec![[GaussianEstimator::default(); 2]; n_features],
        }
    }

    fn total(&self) -> f64 {
        self.class_weight[0] + self.class_weight[1]
    }

    fn is_pure(&self) -> bool {
        self.class_weight[0] == 0.0 || self.class_weight[1] == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HoeffdingNode {
    Leaf(LeafStats),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoeffdingTree {
    pub params: HoeffdingParams,
    pub n_features: usize,
    pub nodes: Vec<HoeffdingNode>,
    pub instances_seen: u64,
}

fn entropy(w: [f64; 2]) -> f64 {
    let total = w[0] + w[1];
    if total <= 0.0 {
        return 0.0;
    }
    w.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| {
            let p = v / total;
            -p * p.log2()
        })
        .sum()
}

/// Information gain of splitting `parent` into `left` and its complement.
fn info_gain(parent: [f64; 2], left: [f64; 2]) -> f64 {
    let right = [parent[0] - left[0], parent[1] - left[1]];
    let (wl, wr) = (left[0] + left[1], right[0] + right[1]);
    let total = wl + wr;
    if total <= 0.0 || wl <= 0.0 || wr <= 0.0 {
        return 0.0;
    }
    entropy(parent) - (wl / total) * entropy(left) - (wr / total) * entropy(right)
}

struct SplitCandidate {
    feature: usize,
    threshold: f64,
    merit: f64,
    left: [f64; 2],
}

impl HoeffdingTree {
    pub fn new(n_features: usize, params: HoeffdingParams) -> Self {
        Self {
            params,
            n_features,
            nodes: vec![HoeffdingNode::Leaf(LeafStats::new(n_features, [0.0; 2]))],
            instances_seen: 0,
        }
    }

    /// Single pass over `dataset` in row order.
    pub fn fit(dataset: &Dataset, params: &HoeffdingParams) -> Result<Self> {
        dataset.check_trainable()?;
        let mut tree = Self::new(dataset.n_features(), params.clone());
        for (x, &y) in dataset.rows.iter().zip(&dataset.labels) {
            tree.update(x, y)?;
        }
        Ok(tree)
    }

    fn leaf_index(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                HoeffdingNode::Leaf(_) => return i,
                HoeffdingNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, HoeffdingNode::Leaf(_)))
            .count()
    }

    /// Incorporates one labeled instance; may split the reached leaf.
    pub fn update(&mut self, x: &[f64], positive: bool) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::SchemaMismatch {
                expected: format!("{} features", self.n_features),
                found: format!("{} features", x.len()),
            });
        }
        self.instances_seen += 1;
        let idx = self.leaf_index(x);
        let class = positive as usize;
        let HoeffdingNode::Leaf(leaf) = &mut self.nodes[idx] else {
            unreachable!()
        };
        leaf.class_weight[class] += 1.0;
        for (obs, &v) in leaf.observers.iter_mut().zip(x) {
            obs[class].add(v);
        }
        if leaf.total() - leaf.weight_at_last_check >= self.params.grace_period as f64 {
            leaf.weight_at_last_check = leaf.total();
            if !leaf.is_pure() {
                self.attempt_split(idx);
            }
        }
        Ok(())
    }

    fn best_split_for(&self, leaf: &LeafStats, feature: usize) -> Option<SplitCandidate> {
        let obs = &leaf.observers[feature];
        let lo = obs[0].min.min(obs[1].min);
        let hi = obs[0].max.max(obs[1].max);
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return None;
        }
        let parent = leaf.class_weight;
        let steps = self.params.split_points;
        let mut best: Option<SplitCandidate> = None;
        for s in 1..=steps {
            let t = lo + (hi - lo) * s as f64 / (steps + 1) as f64;
            let left = [obs[0].weight_below(t), obs[1].weight_below(t)];
            let merit = info_gain(parent, left);
            if best.as_ref().is_none_or(|b| merit > b.merit) {
                best = Some(SplitCandidate {
                    feature,
                    threshold: t,
                    merit,
                    left,
                });
            }
        }
        best
    }

    fn attempt_split(&mut self, idx: usize) {
        let HoeffdingNode::Leaf(leaf) = &self.nodes[idx] else {
            return;
        };
        let mut candidates: Vec<SplitCandidate> = (0..self.n_features)
            .filter_map(|f| self.best_split_for(leaf, f))
            .collect();
        // stable sort keeps the lower feature index first among equal merits
        candidates.sort_by(|a, b| b.merit.total_cmp(&a.merit));
        let Some(best) = candidates.first() else {
            return;
        };
        // the "no split" alternative always has merit 0
        let second = candidates.get(1).map_or(0.0, |c| c.merit.max(0.0));
        let n = leaf.total().round().max(1.0) as usize;
        // information gain on two classes lies in [0, 1]
        let Ok(eps) = hoeffding_bound(1.0, self.params.delta, n) else {
            return;
        };
        if best.merit <= 0.0 || !(best.merit - second > eps || eps < self.params.tau) {
            return;
        }
        let parent = leaf.class_weight;
        let left_w = best.left;
        let right_w = [parent[0] - left_w[0], parent[1] - left_w[1]];
        let (feature, threshold) = (best.feature, best.threshold);
        let left = self.nodes.len();
        self.nodes
            .push(HoeffdingNode::Leaf(LeafStats::new(self.n_features, left_w)));
        self.nodes
            .push(HoeffdingNode::Leaf(LeafStats::new(self.n_features, right_w)));
        self.nodes[idx] = HoeffdingNode::Split {
            feature,
            threshold,
            left,
            right: left + 1,
        };
    }

    /// Majority class of the reached leaf; confidence is its class share.
    pub fn predict(&self, x: &[f64]) -> Prediction {
        let HoeffdingNode::Leaf(leaf) = &self.nodes[self.leaf_index(x)] else {
            unreachable!()
        };
        let total = leaf.total();
        let p = if total > 0.0 {
            leaf.class_weight[1] / total
        } else {
            0.5
        };
        Prediction::from_probability(p)
    }
}
