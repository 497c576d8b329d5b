//! Weighted binary decision trees over numeric attributes, shared by the
//! random forest (information gain, random attribute subsets) and C4.5
//! (gain ratio, pruning).

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    InfoGain,
    /// C4.5 gain ratio with the MDL threshold penalty, restricted to
    /// attributes whose gain is at least the average.
    GainRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        /// Training weight per class: `[negative, positive]`.
        counts: [f64; 2],
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        counts: [f64; 2],
    },
}

impl TreeNode {
    pub fn counts(&self) -> [f64; 2] {
        match self {
            TreeNode::Leaf { counts } | TreeNode::Split { counts, .. } => *counts,
        }
    }
}

/// Flat node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

pub struct TreeSpec {
    pub criterion: Criterion,
    /// Minimum weight on each side of a split.
    pub min_leaf: f64,
    /// Attributes examined per split; `None` means all of them.
    pub mtry: Option<usize>,
    pub max_depth: Option<usize>,
}

pub(crate) fn entropy(counts: [f64; 2]) -> f64 {
    let total = counts[0] + counts[1];
    if total <= 0.0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum()
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
    ratio: f64,
}

struct Builder<'a, R> {
    rows: &'a [Vec<f64>],
    labels: &'a [bool],
    weights: &'a [f64],
    spec: &'a TreeSpec,
    rng: Option<&'a mut R>,
    nodes: Vec<TreeNode>,
}

impl<R: Rng> Builder<'_, R> {
    fn counts(&self, idx: &[usize]) -> [f64; 2] {
        let mut c = [0.0; 2];
        for &i in idx {
            c[self.labels[i] as usize] += self.weights[i];
        }
        c
    }

    fn best_for_feature(&self, idx: &mut [usize], feature: usize, parent: [f64; 2]) -> Option<Candidate> {
        let rows = self.rows;
        idx.sort_by(|&a, &b| rows[a][feature].total_cmp(&rows[b][feature]).then(a.cmp(&b)));
        let total = parent[0] + parent[1];
        let parent_entropy = entropy(parent);
        let mut left = [0.0; 2];
        let mut best: Option<(f64, f64, f64)> = None; // (gain, threshold, left weight)
        let mut distinct_cuts = 0usize;
        for w in 0..idx.len() - 1 {
            let i = idx[w];
            left[self.labels[i] as usize] += self.weights[i];
            let (v, next) = (rows[i][feature], rows[idx[w + 1]][feature]);
            if next <= v {
                continue;
            }
            distinct_cuts += 1;
            let wl = left[0] + left[1];
            let wr = total - wl;
            if wl < self.spec.min_leaf || wr < self.spec.min_leaf {
                continue;
            }
            let right = [parent[0] - left[0], parent[1] - left[1]];
            let gain =
                parent_entropy - (wl / total) * entropy(left) - (wr / total) * entropy(right);
            if best.is_none_or(|(g, _, _)| gain > g) {
                best = Some((gain, v + (next - v) / 2.0, wl));
            }
        }
        let (mut gain, threshold, wl) = best?;
        let ratio = match self.spec.criterion {
            Criterion::InfoGain => gain,
            Criterion::GainRatio => {
                gain -= (distinct_cuts as f64).log2() / total;
                let split_info = entropy([wl, total - wl]);
                if split_info <= 0.0 {
                    return None;
                }
                gain / split_info
            }
        };
        Some(Candidate {
            feature,
            threshold,
            gain,
            ratio,
        })
    }

    fn choose(&mut self, idx: &mut [usize], parent: [f64; 2]) -> Option<Candidate> {
        let d = self.rows[0].len();
        let features: Vec<usize> = match (self.spec.mtry, self.rng.as_deref_mut()) {
            (Some(m), Some(rng)) if m < d => {
                let mut f = sample(rng, d, m).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        };
        let cands: Vec<Candidate> = features
            .into_iter()
            .filter_map(|f| self.best_for_feature(idx, f, parent))
            .collect();
        match self.spec.criterion {
            Criterion::InfoGain => cands
                .into_iter()
                .filter(|c| c.gain > 0.0)
                .reduce(|a, b| if b.gain > a.gain { b } else { a }),
            Criterion::GainRatio => {
                let positive: Vec<Candidate> =
                    cands.into_iter().filter(|c| c.gain > 0.0).collect();
                if positive.is_empty() {
                    return None;
                }
                let avg = positive.iter().map(|c| c.gain).sum::<f64>() / positive.len() as f64;
                positive
                    .into_iter()
                    .filter(|c| c.gain >= avg - 1e-12)
                    .reduce(|a, b| if b.ratio > a.ratio { b } else { a })
            }
        }
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let counts = self.counts(idx);
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { counts });
        let pure = counts[0] <= 0.0 || counts[1] <= 0.0;
        let total = counts[0] + counts[1];
        if pure
            || idx.len() < 2
            || total < 2.0 * self.spec.min_leaf
            || self.spec.max_depth.is_some_and(|m| depth >= m)
        {
            return id;
        }
        let Some(c) = self.choose(idx, counts) else {
            return id;
        };
        let (feature, threshold) = (c.feature, c.threshold);
        let rows = self.rows;
        let mut left_idx: Vec<usize> = idx.iter().copied().filter(|&i| rows[i][feature] <= threshold).collect();
        let mut right_idx: Vec<usize> = idx.iter().copied().filter(|&i| rows[i][feature] > threshold).collect();
        let left = self.grow(&mut left_idx, depth + 1);
        let right = self.grow(&mut right_idx, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
            counts,
        };
        id
    }
}

impl DecisionTree {
    /// Grows a tree on rows with non-zero weight. `rng` is consulted only
    /// when `spec.mtry` restricts the attributes per split.
    pub fn grow<R: Rng>(
        rows: &[Vec<f64>],
        labels: &[bool],
        weights: &[f64],
        spec: &TreeSpec,
        rng: Option<&mut R>,
    ) -> Self {
        let mut idx: Vec<usize> = (0..rows.len()).filter(|&i| weights[i] > 0.0).collect();
        let mut b = Builder {
            rows,
            labels,
            weights,
            spec,
            rng,
            nodes: Vec::new(),
        };
        if idx.is_empty() {
            b.nodes.push(TreeNode::Leaf { counts: [0.0; 2] });
        } else {
            b.grow(&mut idx, 0);
        }
        Self { nodes: b.nodes }
    }

    pub fn leaf_counts(&self, x: &[f64]) -> [f64; 2] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { counts } => return *counts,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Majority vote of the reached leaf; ties go to the positive class.
    pub fn predict_positive(&self, x: &[f64]) -> bool {
        let c = self.leaf_counts(x);
        c[1] >= c[0]
    }

    /// Nodes reachable from the root.
    pub fn node_count(&self) -> usize {
        let mut stack = vec![0];
        let mut n = 0;
        while let Some(i) = stack.pop() {
            n += 1;
            if let TreeNode::Split { left, right, .. } = &self.nodes[i] {
                stack.push(*left);
                stack.push(*right);
            }
        }
        n
    }

    /// Rebuilds the arena without unreachable nodes.
    pub fn compact(&self) -> Self {
        fn copy(src: &[TreeNode], i: usize, out: &mut Vec<TreeNode>) -> usize {
            let id = out.len();
            out.push(src[i].clone());
            if let TreeNode::Split { left, right, .. } = &src[i] {
                let l = copy(src, *left, out);
                let r = copy(src, *right, out);
                if let TreeNode::Split { left, right, .. } = &mut out[id] {
                    *left = l;
                    *right = r;
                }
            }
            id
        }
        let mut nodes = Vec::with_capacity(self.nodes.len());
        copy(&self.nodes, 0, &mut nodes);
        Self { nodes }
    }
}
