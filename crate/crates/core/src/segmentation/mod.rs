//! Repetition segmentation by template matching.
//!
//! Quiet samples near the channel baseline are clustered with k-means; the
//! cluster centroids are candidate cut points. Every chunk between two
//! candidates (optionally skipping a few) is featurized and scored by a
//! chunk classifier, and a maximum-confidence set of non-overlapping
//! positive chunks becomes the segmentation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{chunk_feature_vector, ChunkFeatures, FeatureSchema};
use crate::learners::{self, Algorithm, Dataset, HoeffdingParams, Model, TrainConfig};
use crate::signal::{Channel, ProcessedRecording};
use crate::stats;

pub mod kmeans;

pub use kmeans::{elbow, kmeans_1d, ElbowRule, KMeansFit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationConfig {
    /// Channel used for zero-velocity detection.
    pub channel: Channel,
    /// Channel whose chunks are featurized for the classifier.
    pub feature_channel: Channel,
    /// Allowed distance from the normalized baseline.
    pub zero_vel_threshold: f64,
    pub dwell_samples: usize,
    pub variance_threshold: f64,
    pub k_min: usize,
    pub k_max: usize,
    /// When set, k = expected_reps + 1 instead of the elbow scan.
    pub expected_reps: Option<usize>,
    pub min_chunk_samples: usize,
    pub max_chunk_samples: usize,
    /// Intermediate candidates a chunk may skip over.
    pub max_skip: usize,
    pub kmeans_restarts: usize,
    pub kmeans_max_iter: usize,
    pub elbow_rule: ElbowRule,
    /// Minimum deviation from the resting level that counts as movement
    /// when trimming a selected chunk to its active part.
    pub trim_margin: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            channel: Channel::Mag,
            feature_channel: Channel::Mag,
            zero_vel_threshold: 0.05,
            dwell_samples: 26,
            variance_threshold: 1e-4,
            k_min: 2,
            k_max: 40,
            expected_reps: None,
            min_chunk_samples: 51,
            max_chunk_samples: 1536,
            max_skip: 2,
            kmeans_restarts: 10,
            kmeans_max_iter: 100,
            elbow_rule: ElbowRule::UniformAdjusted,
            trim_margin: 0.01,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("segmentation config: {m}")));
        if self.k_min == 0 || self.k_min > self.k_max {
            return bad("k range is empty");
        }
        if self.min_chunk_samples >= self.max_chunk_samples {
            return bad("min_chunk_samples must be below max_chunk_samples");
        }
        if !(self.zero_vel_threshold > 0.0)
            || !(self.variance_threshold > 0.0)
            || !(self.trim_margin >= 0.0)
        {
            return bad("thresholds must be positive");
        }
        if self.dwell_samples == 0 || self.kmeans_max_iter == 0 {
            return bad("dwell_samples and kmeans_max_iter must be positive");
        }
        if self.expected_reps == Some(0) {
            return bad("expected_reps must be positive");
        }
        Ok(())
    }
}

/// Indices whose centered dwell window stays within `zero_vel_threshold` of
/// `baseline` and has variance below `variance_threshold`.
pub fn detect_zero_velocity(
    signal: &[f64],
    baseline: f64,
    config: &SegmentationConfig,
) -> Result<Vec<usize>> {
    let w = config.dwell_samples;
    if w == 0 {
        return Err(Error::InvalidArgument("dwell window must be positive".into()));
    }
    if signal.len() < w {
        return Err(Error::InvalidArgument(format!(
            "signal of {} samples is shorter than the dwell window ({w})",
            signal.len()
        )));
    }
    let n = signal.len();
    let mut quiet = vec![0usize; n + 1];
    for (i, v) in signal.iter().enumerate() {
        quiet[i + 1] = quiet[i] + ((v - baseline).abs() < config.zero_vel_threshold) as usize;
    }
    let half = w / 2;
    let mut out = Vec::new();
    for i in half..=n + half - w {
        let (a, b) = (i - half, i - half + w);
        if quiet[b] - quiet[a] != w {
            continue;
        }
        if stats::variance(&signal[a..b]) < config.variance_threshold {
            out.push(i);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub zero_velocity_indices: Vec<usize>,
    /// Strictly increasing, in sample-index units.
    pub centroids: Vec<f64>,
}

/// Clusters zero-velocity indices; k is `expected_reps + 1` when set,
/// otherwise chosen by the elbow scan over `[k_min, k_max]`.
pub fn cluster_candidates(
    indices: &[usize],
    config: &SegmentationConfig,
    seed: u64,
) -> Result<CandidateSet> {
    let mut sorted = indices.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() < 2 {
        return Err(Error::InsufficientCandidates {
            needed: 2,
            got: sorted.len(),
        });
    }
    let points: Vec<f64> = sorted.iter().map(|&i| i as f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fit = match config.expected_reps {
        Some(r) => kmeans_1d(
            &points,
            r + 1,
            config.kmeans_restarts,
            config.kmeans_max_iter,
            &mut rng,
        )?,
        None => elbow(
            &points,
            config.k_min,
            config.k_max,
            config.kmeans_restarts,
            config.kmeans_max_iter,
            config.elbow_rule,
            &mut rng,
        )?,
    };
    let mut centroids = fit.centroids;
    centroids.dedup();
    Ok(CandidateSet {
        zero_velocity_indices: sorted,
        centroids,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChunkVerdict {
    Repetition,
    NonRepetition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    pub start_index: usize,
    pub end_index: usize,
    pub features: ChunkFeatures,
    pub verdict: Option<ChunkVerdict>,
    /// Classifier confidence that the chunk is a repetition.
    pub confidence: f64,
}

/// Chunks between candidate cut points `i < j` with at most `max_skip`
/// candidates in between and a span within the configured bounds.
pub fn enumerate_chunks(
    signal: &[f64],
    cut_candidates: &[usize],
    config: &SegmentationConfig,
) -> Result<Vec<Chunk>> {
    let mut chunks = Vec::new();
    for (i, &a) in cut_candidates.iter().enumerate() {
        for &b in cut_candidates.iter().skip(i + 1).take(config.max_skip + 1) {
            let span = b.saturating_sub(a);
            if span < config.min_chunk_samples || span > config.max_chunk_samples {
                continue;
            }
            chunks.push(Chunk {
                start_index: a,
                end_index: b,
                features: chunk_feature_vector(&signal[a..b])?,
                verdict: None,
                confidence: 0.0,
            });
        }
    }
    Ok(chunks)
}

/// Maximum-total-weight subset of pairwise disjoint half-open intervals.
/// Equal totals prefer taking the interval that starts earlier. Returns
/// indices into `intervals` in start order.
pub fn weighted_interval_schedule(intervals: &[(usize, usize, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..intervals.len()).collect();
    order.sort_by_key(|&i| (intervals[i].0, intervals[i].1, i));
    let m = order.len();
    let starts: Vec<usize> = order.iter().map(|&i| intervals[i].0).collect();
    let mut best = vec![0.0; m + 1];
    let mut take = vec![false; m];
    let mut next = vec![m; m];
    for p in (0..m).rev() {
        let (_, end, w) = intervals[order[p]];
        next[p] = p + starts[p..].partition_point(|&s| s < end);
        let with = w + best[next[p]];
        let without = best[p + 1];
        take[p] = with >= without;
        best[p] = if take[p] { with } else { without };
    }
    let mut out = Vec::new();
    let mut p = 0;
    while p < m {
        if take[p] {
            out.push(order[p]);
            p = next[p];
        } else {
            p += 1;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationResult {
    pub cut_points: Vec<usize>,
    /// Half-open `[start, end)` sample ranges.
    pub repetitions: Vec<(usize, usize)>,
    pub rejected_chunks: usize,
    pub candidates: Option<CandidateSet>,
    pub chunks: Vec<Chunk>,
    pub warning: Option<String>,
}

impl SegmentationResult {
    fn empty(warning: impl Into<String>) -> Self {
        Self {
            cut_points: Vec::new(),
            repetitions: Vec::new(),
            rejected_chunks: 0,
            candidates: None,
            chunks: Vec::new(),
            warning: Some(warning.into()),
        }
    }

    /// `{"cut_points": [...], "repetitions": [[s, e], ...], "rejected": n}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "cut_points": self.cut_points,
            "repetitions": self.repetitions.iter().map(|&(s, e)| [s, e]).collect::<Vec<_>>(),
            "rejected": self.rejected_chunks,
        })
    }
}

/// Resting level (median of the zero-velocity samples), activity margin
/// (the larger of `trim_margin` and four robust sigmas) and the robust sigma.
fn resting_band(signal: &[f64], quiet: &[usize], trim_margin: f64) -> (f64, f64, f64) {
    let vals: Vec<f64> = quiet.iter().map(|&i| signal[i]).collect();
    let sorted = stats::sorted_copy(&vals);
    let median = stats::quantile_sorted(&sorted, 0.5);
    let dev = stats::sorted_copy(&vals.iter().map(|v| (v - median).abs()).collect::<Vec<_>>());
    let mad = stats::quantile_sorted(&dev, 0.5);
    let sigma = 1.4826 * mad;
    (median, trim_margin.max(4.0 * sigma), sigma)
}

/// Shrinks `[a, b)` to its active part: the first and last samples beyond
/// `level ± margin`, each extended outward until the signal comes back
/// within `noise` of `level`. `None` when nothing leaves the band.
fn trim_to_activity(
    signal: &[f64],
    (a, b): (usize, usize),
    level: f64,
    margin: f64,
    noise: f64,
) -> Option<(usize, usize)> {
    let active = |i: &usize| (signal[*i] - level).abs() > margin;
    let (mut s, last) = ((a..b).find(active)?, (a..b).rev().find(active)?);
    let mut e = last + 1;
    let outside = |i: usize, sign: f64| (signal[i] - level) * sign > noise;
    let sign_s = (signal[s] - level).signum();
    while s > a && outside(s - 1, sign_s) {
        s -= 1;
    }
    let sign_e = (signal[last] - level).signum();
    while e < b && outside(e, sign_e) {
        e += 1;
    }
    Some((s, e))
}

/// Full segmentation of a processed recording with a trained chunk
/// classifier (a model over the chunk schema).
pub fn select_cut_points(
    processed: &ProcessedRecording,
    model: &Model,
    config: &SegmentationConfig,
    seed: u64,
) -> Result<SegmentationResult> {
    config.validate()?;
    model.check_schema(&FeatureSchema::chunk())?;
    let signal = processed.channel(config.channel);
    let baseline = processed.baseline_norm(config.channel);
    let quiet = detect_zero_velocity(signal, baseline, config)?;
    let candidates = match cluster_candidates(&quiet, config, seed) {
        Ok(c) => c,
        Err(Error::InsufficientCandidates { .. }) => {
            return Ok(SegmentationResult::empty("no candidate cut points"))
        }
        Err(e) => return Err(e),
    };
    let cut_candidates: Vec<usize> = {
        let mut v: Vec<usize> = candidates
            .centroids
            .iter()
            .map(|c| (c.round() as usize).min(signal.len() - 1))
            .collect();
        v.dedup();
        v
    };

    let feature_signal = processed.channel(config.feature_channel);
    let mut chunks = enumerate_chunks(feature_signal, &cut_candidates, config)?;
    chunks.par_iter_mut().try_for_each(|c| -> Result<()> {
        let p = model.predict(c.features.as_slice())?;
        c.confidence = p.p_positive();
        c.verdict = Some(if p.positive {
            ChunkVerdict::Repetition
        } else {
            ChunkVerdict::NonRepetition
        });
        Ok(())
    })?;
    let positives: Vec<usize> = (0..chunks.len())
        .filter(|&i| chunks[i].verdict == Some(ChunkVerdict::Repetition))
        .collect();
    let mut rejected = chunks.len() - positives.len();
    let intervals: Vec<(usize, usize, f64)> = positives
        .iter()
        .map(|&i| (chunks[i].start_index, chunks[i].end_index, chunks[i].confidence))
        .collect();
    let selected: Vec<usize> = weighted_interval_schedule(&intervals)
        .into_iter()
        .map(|j| positives[j])
        .collect();

    let (level, margin, noise) = resting_band(signal, &candidates.zero_velocity_indices, config.trim_margin);
    let mut cut_points = Vec::new();
    let mut repetitions = Vec::new();
    for &i in &selected {
        let (a, b) = (chunks[i].start_index, chunks[i].end_index);
        // an accepted chunk that never leaves the resting band is dropped
        let Some(rep) = trim_to_activity(signal, (a, b), level, margin, noise) else {
            rejected += 1;
            continue;
        };
        cut_points.push(a);
        cut_points.push(b);
        repetitions.push(rep);
    }
    cut_points.sort_unstable();
    cut_points.dedup();
    let warning = if selected.is_empty() {
        Some("classifier accepted no chunk".to_string())
    } else if repetitions.is_empty() {
        Some("no accepted chunk contains movement".to_string())
    } else {
        None
    };
    Ok(SegmentationResult {
        cut_points,
        repetitions,
        rejected_chunks: rejected,
        candidates: Some(candidates),
        chunks,
        warning,
    })
}

/// Fraction of true repetitions recovered after penalizing count
/// mismatches: `Σ(reps - |reps - segm|) / Σ reps`. Not clamped.
pub fn segmentation_accuracy(cases: &[(usize, usize)]) -> Result<f64> {
    if cases.is_empty() {
        return Err(Error::EmptyInput);
    }
    if cases.iter().any(|&(r, _)| r == 0) {
        return Err(Error::InvalidArgument(
            "every case needs a positive repetition count".into(),
        ));
    }
    let mut num: i64 = 0;
    let mut den: i64 = 0;
    for &(r, s) in cases {
        let (r, s) = (r as i64, s as i64);
        num += r - (r - s).abs();
        den += r;
    }
    Ok(num as f64 / den as f64)
}

/// Labeled chunk features for training the chunk classifier. `true` marks
/// a repetition.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TemplateSet {
    pub features: Vec<ChunkFeatures>,
    pub labels: Vec<bool>,
}

impl TemplateSet {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn push(&mut self, f: ChunkFeatures, positive: bool) {
        self.features.push(f);
        self.labels.push(positive);
    }

    pub fn extend(&mut self, other: TemplateSet) {
        self.features.extend(other.features);
        self.labels.extend(other.labels);
    }

    pub fn to_dataset(&self) -> Result<Dataset> {
        Dataset::new(
            FeatureSchema::chunk(),
            self.features.iter().map(|f| f.0.to_vec()).collect(),
            self.labels.clone(),
            vec!["templates".to_string(); self.len()],
        )
    }
}

/// Samples a chunk may extend past a true repetition and still count as
/// containing exactly that repetition.
pub const TEMPLATE_SLACK: usize = 10;

/// Whether `[a, b)` holds exactly one ground-truth repetition and cuts
/// through none.
pub fn chunk_matches_truth(a: usize, b: usize, truth: &[(usize, usize)]) -> bool {
    let mut contained = 0;
    for &(s, e) in truth {
        let overlap = e.min(b).saturating_sub(s.max(a));
        if overlap == 0 {
            continue;
        }
        if s + TEMPLATE_SLACK >= a && e <= b + TEMPLATE_SLACK {
            contained += 1;
        } else if overlap > TEMPLATE_SLACK {
            return false;
        }
    }
    contained == 1
}

/// Builds templates from a recording with ground truth: every enumerated
/// chunk labeled against the truth, plus both halves of each true
/// repetition chunk and the silent gaps between repetitions as negatives.
pub fn templates_from_recording(
    processed: &ProcessedRecording,
    config: &SegmentationConfig,
    seed: u64,
) -> Result<TemplateSet> {
    let truth = processed.ground_truth_bounds.as_deref().ok_or_else(|| {
        Error::InvalidRecording("template recordings need ground-truth bounds".into())
    })?;
    let signal = processed.channel(config.channel);
    let quiet = detect_zero_velocity(signal, processed.baseline_norm(config.channel), config)?;
    let mut set = TemplateSet::default();
    let Ok(candidates) = cluster_candidates(&quiet, config, seed) else {
        return Ok(set);
    };
    let mut cuts: Vec<usize> = candidates
        .centroids
        .iter()
        .map(|c| (c.round() as usize).min(signal.len() - 1))
        .collect();
    cuts.dedup();
    let feature_signal = processed.channel(config.feature_channel);
    for c in enumerate_chunks(feature_signal, &cuts, config)? {
        let positive = chunk_matches_truth(c.start_index, c.end_index, truth);
        if positive {
            let mid = truth
                .iter()
                .find(|&&(s, e)| s + TEMPLATE_SLACK >= c.start_index && e <= c.end_index + TEMPLATE_SLACK)
                .map(|&(s, e)| (s + e) / 2)
                .unwrap_or((c.start_index + c.end_index) / 2);
            for (a, b) in [(c.start_index, mid), (mid, c.end_index)] {
                if b > a + 1 {
                    set.push(chunk_feature_vector(&feature_signal[a..b])?, false);
                }
            }
        }
        set.push(c.features, positive);
    }
    for w in truth.windows(2) {
        let (a, b) = (w[0].1, w[1].0);
        if b - a >= config.min_chunk_samples {
            set.push(chunk_feature_vector(&feature_signal[a..b])?, false);
        }
    }
    Ok(set)
}

/// Trains the chunk classifier as a single pass of a Hoeffding tree over
/// the templates in a seeded shuffled order.
pub fn train_chunk_classifier(
    templates: &TemplateSet,
    params: &HoeffdingParams,
    seed: u64,
) -> Result<Model> {
    let mut order: Vec<usize> = (0..templates.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let shuffled = TemplateSet {
        features: order.iter().map(|&i| templates.features[i]).collect(),
        labels: order.iter().map(|&i| templates.labels[i]).collect(),
    };
    let mut config = TrainConfig::new(Algorithm::Hoeffding, seed);
    config.hyperparameters.hoeffding = params.clone();
    learners::train(&shuffled.to_dataset()?, &config)
}
