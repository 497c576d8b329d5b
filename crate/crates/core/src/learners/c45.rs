//! C4.5 decision tree: gain-ratio splits on numeric thresholds and
//! pessimistic-error subtree replacement (no subtree raising).

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::tree::{Criterion, DecisionTree, TreeNode, TreeSpec};
use super::{Dataset, Prediction};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct C45Params {
    /// Confidence factor for the pessimistic error estimate.
    pub confidence: f64,
    pub min_leaf: f64,
    pub prune: bool,
}

impl Default for C45Params {
    fn default() -> Self {
        Self {
            confidence: 0.25,
            min_leaf: 2.0,
            prune: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C45Tree {
    pub tree: DecisionTree,
}

/// Extra errors to add to `errors` observed among `n` instances so the
/// total is the upper confidence limit of the binomial error rate.
pub fn added_errors(n: f64, errors: f64, confidence: f64) -> f64 {
    if errors < 1.0 {
        let base = n * (1.0 - confidence.powf(1.0 / n));
        if errors == 0.0 {
            return base;
        }
        return base + errors * (added_errors(n, 1.0, confidence) - base);
    }
    if errors + 0.5 >= n {
        return (n - errors).max(0.0);
    }
    let z = Normal::standard().inverse_cdf(1.0 - confidence);
    let f = (errors + 0.5) / n;
    let r = (f + z * z / (2.0 * n) + z * (f / n - f * f / n + z * z / (4.0 * n * n)).sqrt())
        / (1.0 + z * z / n);
    r * n - errors
}

fn leaf_error_estimate(counts: [f64; 2], confidence: f64) -> f64 {
    let n = counts[0] + counts[1];
    if n <= 0.0 {
        return 0.0;
    }
    let e = counts[0].min(counts[1]);
    e + added_errors(n, e, confidence)
}

/// Bottom-up subtree replacement. Returns the estimated errors of the
/// (possibly collapsed) subtree rooted at `i`.
fn prune(nodes: &mut [TreeNode], i: usize, confidence: f64) -> f64 {
    match nodes[i].clone() {
        TreeNode::Leaf { counts } => leaf_error_estimate(counts, confidence),
        TreeNode::Split {
            left,
            right,
            counts,
            ..
        } => {
            let subtree = prune(nodes, left, confidence) + prune(nodes, right, confidence);
            let as_leaf = leaf_error_estimate(counts, confidence);
            if as_leaf <= subtree + 0.1 {
                nodes[i] = TreeNode::Leaf { counts };
                as_leaf
            } else {
                subtree
            }
        }
    }
}

impl C45Tree {
    pub fn fit(dataset: &Dataset, params: &C45Params) -> Result<Self> {
        dataset.check_trainable()?;
        if !(params.confidence > 0.0 && params.confidence <= 0.5) {
            return Err(Error::InvalidArgument(
                "C4.5 confidence must be in (0, 0.5]".into(),
            ));
        }
        let tree = Self::grow_unpruned(dataset, params);
        if !params.prune {
            return Ok(Self { tree });
        }
        let mut nodes = tree.nodes;
        prune(&mut nodes, 0, params.confidence);
        Ok(Self {
            tree: DecisionTree { nodes }.compact(),
        })
    }

    fn grow_unpruned(dataset: &Dataset, params: &C45Params) -> DecisionTree {
        let spec = TreeSpec {
            criterion: Criterion::GainRatio,
            min_leaf: params.min_leaf,
            mtry: None,
            max_depth: None,
        };
        let weights = vec![1.0; dataset.len()];
        DecisionTree::grow::<ChaCha8Rng>(&dataset.rows, &dataset.labels, &weights, &spec, None)
    }

    pub fn node_count(&self) -> usize {
        self.tree.node_count()
    }

    /// Leaf class share of the predicted label.
    pub fn predict(&self, x: &[f64]) -> Prediction {
        let c = self.tree.leaf_counts(x);
        let total = c[0] + c[1];
        Prediction::from_probability(if total > 0.0 { c[1] / total } else { 0.5 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn added_errors_reference_values() {
        // z(0.75) = 0.6744897501960817; values follow the closed form by hand
        let z: f64 = 0.6744897501960817;
        let (n, e) = (20.0, 3.0);
        let f = (e + 0.5) / n;
        let r = (f + z * z / (2.0 * n) + z * (f / n - f * f / n + z * z / (4.0 * n * n)).sqrt())
            / (1.0 + z * z / n);
        assert!((added_errors(n, e, 0.25) - (r * n - e)).abs() < 1e-9);
        // no observed errors: n (1 - CF^(1/n))
        assert!((added_errors(6.0, 0.0, 0.25) - 6.0 * (1.0 - 0.25f64.powf(1.0 / 6.0))).abs() < 1e-12);
        assert_eq!(added_errors(4.0, 4.0, 0.25), 0.0);
    }
}
