//! Binary classifiers: a streaming Hoeffding tree and five batch learners
//! (logistic regression, SMO-trained linear SVM, AdaBoost.M1 over stumps,
//! random forest, C4.5).
//!
//! Labels are booleans here (`true` = positive class). Repetition datasets
//! use `deviant` as the positive class; the segmenter uses `repetition`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureSchema, FeatureVector};
use crate::signal::RepLabel;

pub mod adaboost;
pub mod c45;
pub mod forest;
pub mod hoeffding;
pub mod logistic;
pub mod smo;
pub mod tree;

/// Serde adapter for floats that may be infinite: non-finite values are
/// written as the strings "inf", "-inf" or "nan".
pub(crate) mod extended_float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("bad float {other:?}"))),
            },
        }
    }
}

pub use adaboost::{AdaBoost, AdaBoostParams};
pub use c45::{C45Params, C45Tree};
pub use forest::{ForestParams, RandomForest};
pub use hoeffding::{hoeffding_bound, HoeffdingParams, HoeffdingTree};
pub use logistic::{LogisticModel, LogisticParams};
pub use smo::{LinearSvm, SmoParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Logistic,
    Smo,
    Adaboost,
    RandomForest,
    C45,
    Hoeffding,
}

impl Algorithm {
    /// The five batch learners compared in cross-validation.
    pub const BATCH: [Algorithm; 5] = [
        Algorithm::Logistic,
        Algorithm::Smo,
        Algorithm::Adaboost,
        Algorithm::RandomForest,
        Algorithm::C45,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Logistic => "logistic",
            Algorithm::Smo => "smo",
            Algorithm::Adaboost => "adaboost",
            Algorithm::RandomForest => "random_forest",
            Algorithm::C45 => "c45",
            Algorithm::Hoeffding => "hoeffding",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(Algorithm::Logistic),
            "smo" => Ok(Algorithm::Smo),
            "adaboost" => Ok(Algorithm::Adaboost),
            "rf" | "random_forest" => Ok(Algorithm::RandomForest),
            "c45" | "j48" => Ok(Algorithm::C45),
            "hoeffding" => Ok(Algorithm::Hoeffding),
            _ => Err(Error::InvalidArgument(format!("unknown algorithm {s:?}"))),
        }
    }
}

/// Dense labeled rows with a group (subject) per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: FeatureSchema,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
    pub groups: Vec<String>,
}

impl Dataset {
    pub fn new(
        schema: FeatureSchema,
        rows: Vec<Vec<f64>>,
        labels: Vec<bool>,
        groups: Vec<String>,
    ) -> Result<Self> {
        if rows.len() != labels.len() || rows.len() != groups.len() {
            return Err(Error::InvalidArgument(
                "rows, labels and groups differ in length".into(),
            ));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != schema.len()) {
            return Err(Error::SchemaMismatch {
                expected: format!("{} columns", schema.len()),
                found: format!("{} columns in row {i}", rows[i].len()),
            });
        }
        if let Some(i) = rows.iter().position(|r| r.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidArgument(format!("non-finite value in row {i}")));
        }
        Ok(Self {
            schema,
            rows,
            labels,
            groups,
        })
    }

    /// Labeled repetition vectors (unlabeled ones are rejected).
    pub fn from_feature_vectors(vectors: &[FeatureVector]) -> Result<Self> {
        let schema = FeatureSchema::repetition();
        let mut rows = Vec::with_capacity(vectors.len());
        let mut labels = Vec::with_capacity(vectors.len());
        let mut groups = Vec::with_capacity(vectors.len());
        for v in vectors {
            let label = v
                .label
                .ok_or_else(|| Error::InvalidArgument("unlabeled feature vector".into()))?;
            rows.push(v.values.clone());
            labels.push(label.is_positive());
            groups.push(v.subject_id.clone());
        }
        Self::new(schema, rows, labels, groups)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.schema.len()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            groups: idx.iter().map(|&i| self.groups[i].clone()).collect(),
        }
    }

    fn check_trainable(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyInput);
        }
        let pos = self.positives();
        if pos == 0 || pos == self.len() {
            return Err(Error::DegenerateLabels);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub logistic: LogisticParams,
    pub smo: SmoParams,
    pub adaboost: AdaBoostParams,
    pub random_forest: ForestParams,
    pub c45: C45Params,
    pub hoeffding: HoeffdingParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    pub seed: u64,
    #[serde(default)]
    pub hyperparameters: Hyperparameters,
}

impl TrainConfig {
    pub fn new(algorithm: Algorithm, seed: u64) -> Self {
        Self {
            algorithm,
            seed,
            hyperparameters: Hyperparameters::default(),
        }
    }
}

/// A predicted label with the confidence assigned to that label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub positive: bool,
    /// Confidence in `positive`, in [0.5, 1] for calibrated scores.
    pub score: f64,
}

impl Prediction {
    /// Threshold a positive-class probability; 0.5 goes to the positive class.
    pub fn from_probability(p_positive: f64) -> Self {
        let positive = p_positive >= 0.5;
        Self {
            positive,
            score: if positive { p_positive } else { 1.0 - p_positive },
        }
    }

    pub fn p_positive(&self) -> f64 {
        if self.positive {
            self.score
        } else {
            1.0 - self.score
        }
    }

    pub fn label(&self) -> RepLabel {
        if self.positive {
            RepLabel::Deviant
        } else {
            RepLabel::Correct
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classifier {
    Logistic(LogisticModel),
    Smo(LinearSvm),
    Adaboost(AdaBoost),
    RandomForest(RandomForest),
    C45(C45Tree),
    Hoeffding(HoeffdingTree),
}

impl Classifier {
    pub fn predict(&self, x: &[f64]) -> Prediction {
        match self {
            Classifier::Logistic(m) => m.predict(x),
            Classifier::Smo(m) => m.predict(x),
            Classifier::Adaboost(m) => m.predict(x),
            Classifier::RandomForest(m) => m.predict(x),
            Classifier::C45(m) => m.predict(x),
            Classifier::Hoeffding(m) => m.predict(x),
        }
    }
}

/// A trained, immutable classifier bound to the schema it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub algorithm: Algorithm,
    pub schema_hash: String,
    pub n_features: usize,
    pub seed: u64,
    pub classifier: Classifier,
}

impl Model {
    pub fn check_schema(&self, schema: &FeatureSchema) -> Result<()> {
        let found = schema.hash();
        if found != self.schema_hash {
            return Err(Error::SchemaMismatch {
                expected: self.schema_hash.clone(),
                found,
            });
        }
        Ok(())
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.n_features {
            return Err(Error::SchemaMismatch {
                expected: format!("{} features", self.n_features),
                found: format!("{} features", x.len()),
            });
        }
        Ok(self.classifier.predict(x))
    }

    /// Predicts a repetition vector; the model must carry the repetition
    /// schema hash.
    pub fn predict_features(&self, fv: &FeatureVector) -> Result<Prediction> {
        self.check_schema(&FeatureSchema::repetition())?;
        self.predict(&fv.values)
    }
}

/// Trains one model. Deterministic in (dataset order, seed).
pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<Model> {
    dataset.check_trainable()?;
    let hp = &config.hyperparameters;
    let classifier = match config.algorithm {
        Algorithm::Logistic => Classifier::Logistic(LogisticModel::fit(dataset, &hp.logistic)?),
        Algorithm::Smo => Classifier::Smo(LinearSvm::fit(dataset, &hp.smo)?),
        Algorithm::Adaboost => Classifier::Adaboost(AdaBoost::fit(dataset, &hp.adaboost)?),
        Algorithm::RandomForest => Classifier::RandomForest(RandomForest::fit(
            dataset,
            &hp.random_forest,
            config.seed,
        )?),
        Algorithm::C45 => Classifier::C45(C45Tree::fit(dataset, &hp.c45)?),
        Algorithm::Hoeffding => {
            Classifier::Hoeffding(HoeffdingTree::fit(dataset, &hp.hoeffding)?)
        }
    };
    Ok(Model {
        algorithm: config.algorithm,
        schema_hash: dataset.schema.hash(),
        n_features: dataset.n_features(),
        seed: config.seed,
        classifier,
    })
}

/// Per-column mean and standard deviation; zero spread maps to scale 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Decorrelated per-stream seed (splitmix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tie_goes_to_positive() {
        let p = Prediction::from_probability(0.5);
        assert!(p.positive);
        assert_eq!(p.score, 0.5);
        assert_eq!(p.label(), RepLabel::Deviant);
    }

    #[test]
    fn train_rejects_degenerate() {
        let ds = Dataset::new(
            FeatureSchema::anonymous(1),
            vec![vec![0.0], vec![1.0]],
            vec![true, true],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        for algo in Algorithm::BATCH {
            assert!(matches!(
                train(&ds, &TrainConfig::new(algo, 0)),
                Err(Error::DegenerateLabels)
            ));
        }
        let empty = Dataset::new(FeatureSchema::anonymous(1), vec![], vec![], vec![]).unwrap();
        assert!(matches!(
            train(&empty, &TrainConfig::new(Algorithm::C45, 0)),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn algorithm_names_parse() {
        assert_eq!("rf".parse::<Algorithm>().unwrap(), Algorithm::RandomForest);
        for a in Algorithm::BATCH {
            assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
        }
    }
}
