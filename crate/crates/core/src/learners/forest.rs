use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{Criterion, DecisionTree, TreeSpec};
use super::{derive_seed, Dataset, Prediction};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub trees: usize,
    /// Attributes per split; `None` means `ceil(sqrt(d))`.
    pub mtry: Option<usize>,
    pub bootstrap: bool,
    pub min_leaf: f64,
    pub max_depth: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            trees: 100,
            mtry: None,
            bootstrap: true,
            min_leaf: 1.0,
            max_depth: None,
        }
    }
}

impl ForestParams {
    pub fn mtry_for(&self, d: usize) -> usize {
        self.mtry
            .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
            .clamp(1, d.max(1))
    }

    pub(crate) fn tree_spec(&self, d: usize) -> TreeSpec {
        TreeSpec {
            criterion: Criterion::InfoGain,
            min_leaf: self.min_leaf,
            mtry: Some(self.mtry_for(d)),
            max_depth: self.max_depth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    /// Tree `i` draws its bootstrap sample and attribute subsets from a
    /// generator seeded with `derive_seed(seed, i)`, so the ensemble does
    /// not depend on thread scheduling.
    pub fn fit(dataset: &Dataset, params: &ForestParams, seed: u64) -> Result<Self> {
        dataset.check_trainable()?;
        let n = dataset.len();
        let spec = params.tree_spec(dataset.n_features());
        let trees = (0..params.trees.max(1))
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64));
                let weights = if params.bootstrap {
                    let mut w = vec![0.0; n];
                    for _ in 0..n {
                        w[rng.random_range(0..n)] += 1.0;
                    }
                    w
                } else {
                    vec![1.0; n]
                };
                DecisionTree::grow(&dataset.rows, &dataset.labels, &weights, &spec, Some(&mut rng))
            })
            .collect();
        Ok(Self { trees })
    }

    /// Majority vote; the score is the vote share of the winning label.
    pub fn predict(&self, x: &[f64]) -> Prediction {
        let votes = self.trees.iter().filter(|t| t.predict_positive(x)).count();
        Prediction::from_probability(votes as f64 / self.trees.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureSchema;

    fn xor_like() -> Dataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40 {
            let (a, b) = ((i % 2) as f64, ((i / 2) % 2) as f64);
            rows.push(vec![a + 0.01 * i as f64, b, (i % 7) as f64]);
            labels.push((a as i32 ^ b as i32) == 1);
        }
        let groups = vec!["g".to_string(); rows.len()];
        Dataset::new(FeatureSchema::anonymous(3), rows, labels, groups).unwrap()
    }

    #[test]
    fn unanimous_votes_give_score_one() {
        let ds = xor_like();
        let rf = RandomForest::fit(&ds, &ForestParams::default(), 3).unwrap();
        assert_eq!(rf.trees.len(), 100);
        let mut all_pos = rf.clone();
        all_pos.trees.retain(|t| t.predict_positive(&ds.rows[1]));
        all_pos.trees.truncate(100);
        let p = all_pos.predict(&ds.rows[1]);
        assert!(p.positive);
        assert_eq!(p.score, 1.0);
    }

    #[test]
    fn deterministic_given_seed() {
        let ds = xor_like();
        let a = RandomForest::fit(&ds, &ForestParams::default(), 11).unwrap();
        let b = RandomForest::fit(&ds, &ForestParams::default(), 11).unwrap();
        assert_eq!(a, b);
    }
}
