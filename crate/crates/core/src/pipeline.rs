//! End-to-end composition: segmenter training from synthetic templates,
//! repetition extraction and per-repetition verdicts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::features::{repetition_feature_vector, FeatureVector};
use crate::learners::{derive_seed, HoeffdingParams, Model};
use crate::segmentation::{
    select_cut_points, templates_from_recording, train_chunk_classifier, SegmentationConfig,
    SegmentationResult, TemplateSet,
};
use crate::signal::{preprocess, Exercise, PreprocessConfig, ProcessedRecording, RepLabel};
use crate::synth::{mixed_labels, synth_session, SessionSpec};

/// Boundary tolerance, in samples, for a detected repetition to count as a
/// match of a true one.
pub const MATCH_TOLERANCE: usize = 25;

/// Varied synthetic sessions for building segmenter templates: all four
/// exercises, clean and fatigued pacing, mixed labels, light noise.
pub fn template_session_specs(sessions: usize, seed: u64) -> Vec<SessionSpec> {
    (0..sessions)
        .map(|i| {
            let s = derive_seed(seed, i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let exercise = Exercise::ALL[i % 4];
            let mut spec = SessionSpec::clean(exercise, s);
            if (i / 4) % 2 == 1 {
                spec = spec.fatigue();
            }
            let reps = rng.random_range(6..=12);
            let deviant = rng.random_range(0..=reps);
            spec.labels = mixed_labels(reps, deviant, &mut rng);
            spec.noise_sigma = rng.random_range(0.0..=0.02);
            spec.amplitude_jitter = 0.15;
            spec.duration_jitter = 0.15;
            spec.subject_id = format!("template-{i}");
            spec
        })
        .collect()
}

/// Sessions of one synthetic subject: a subject-specific noise level,
/// movement amplitude and pace, ten repetitions per session with half of
/// them deviant.
pub fn subject_session_specs(
    subject: usize,
    exercise: Exercise,
    sessions: usize,
    seed: u64,
) -> Vec<SessionSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, subject as u64));
    let noise = rng.random_range(0.005..=0.02);
    let amplitude = rng.random_range(0.85..=1.15);
    let pace = rng.random_range(0.85..=1.15);
    (0..sessions)
        .map(|k| {
            let s = derive_seed(derive_seed(seed, subject as u64), (k * 4 + exercise as usize) as u64 + 1);
            let mut spec = SessionSpec::clean(exercise, s);
            spec.template.duration_s = (spec.template.duration_s * pace).clamp(1.0, 10.0);
            for (_, a) in spec.template.active.iter_mut() {
                *a *= amplitude;
            }
            spec.noise_sigma = noise;
            spec.amplitude_jitter = 0.1;
            spec.duration_jitter = 0.1;
            spec.labels = mixed_labels(10, 5, &mut rng);
            spec.subject_id = format!("S{subject:02}");
            spec
        })
        .collect()
}

/// Templates from every spec, concatenated in spec order.
pub fn build_template_set(
    specs: &[SessionSpec],
    preprocess_config: &PreprocessConfig,
    seg_config: &SegmentationConfig,
    seed: u64,
) -> Result<TemplateSet> {
    let parts: Vec<TemplateSet> = specs
        .par_iter()
        .enumerate()
        .map(|(i, spec)| {
            let (raw, _) = synth_session(spec)?;
            let processed = preprocess(&raw, preprocess_config)?;
            templates_from_recording(&processed, seg_config, derive_seed(seed, i as u64))
        })
        .collect::<Result<_>>()?;
    let mut set = TemplateSet::default();
    for p in parts {
        set.extend(p);
    }
    Ok(set)
}

/// Chunk classifier trained on templates from `sessions` synthetic
/// sessions.
pub fn train_synthetic_segmenter(
    sessions: usize,
    preprocess_config: &PreprocessConfig,
    seg_config: &SegmentationConfig,
    params: &HoeffdingParams,
    seed: u64,
) -> Result<Model> {
    let specs = template_session_specs(sessions, seed);
    let templates = build_template_set(&specs, preprocess_config, seg_config, seed)?;
    train_chunk_classifier(&templates, params, seed)
}

/// For every true repetition, the index of the detected repetition whose
/// both boundaries lie within `tol` samples, if any.
pub fn match_to_truth(
    detected: &[(usize, usize)],
    truth: &[(usize, usize)],
    tol: usize,
) -> Vec<Option<usize>> {
    truth
        .iter()
        .map(|&(s, e)| {
            detected
                .iter()
                .position(|&(a, b)| a.abs_diff(s) <= tol && b.abs_diff(e) <= tol)
        })
        .collect()
}

/// Feature vectors of detected repetitions. With ground truth, only the
/// detections matching a true repetition are kept, labeled from the truth.
pub fn repetition_vectors(
    processed: &ProcessedRecording,
    detected: &[(usize, usize)],
) -> Result<Vec<FeatureVector>> {
    let extract = |(a, b): (usize, usize), label: Option<RepLabel>| {
        repetition_feature_vector(
            &processed.vectors.slice(a, b),
            &processed.subject_id,
            processed.exercise,
            label,
        )
    };
    match &processed.ground_truth_bounds {
        Some(truth) => {
            let matches = match_to_truth(detected, truth, MATCH_TOLERANCE);
            matches
                .iter()
                .enumerate()
                .filter_map(|(t, m)| m.map(|d| (t, d)))
                .map(|(t, d)| {
                    let label = processed.rep_labels.as_ref().map(|l| l[t]);
                    extract(detected[d], label)
                })
                .collect()
        }
        None => detected.iter().map(|&r| extract(r, None)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionVerdict {
    pub start: usize,
    pub end: usize,
    pub label: RepLabel,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub detected: usize,
    pub correct_count: usize,
    pub deviant_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub subject_id: String,
    pub exercise: Exercise,
    pub cut_points: Vec<usize>,
    pub repetitions: Vec<RepetitionVerdict>,
    pub summary: Summary,
}

/// Segments, extracts features and classifies every detected repetition.
pub fn analyze(
    processed: &ProcessedRecording,
    segmenter: &Model,
    classifier: &Model,
    seg_config: &SegmentationConfig,
    seed: u64,
) -> Result<(PipelineReport, SegmentationResult)> {
    let seg = select_cut_points(processed, segmenter, seg_config, seed)?;
    let mut repetitions = Vec::with_capacity(seg.repetitions.len());
    for &(start, end) in &seg.repetitions {
        let fv = repetition_feature_vector(
            &processed.vectors.slice(start, end),
            &processed.subject_id,
            processed.exercise,
            None,
        )?;
        let p = classifier.predict_features(&fv)?;
        repetitions.push(RepetitionVerdict {
            start,
            end,
            label: p.label(),
            score: p.score,
        });
    }
    let deviant_count = repetitions
        .iter()
        .filter(|r| r.label == RepLabel::Deviant)
        .count();
    let summary = Summary {
        detected: repetitions.len(),
        correct_count: repetitions.len() - deviant_count,
        deviant_count,
        warning: seg.warning.clone(),
    };
    Ok((
        PipelineReport {
            subject_id: processed.subject_id.clone(),
            exercise: processed.exercise,
            cut_points: seg.cut_points.clone(),
            repetitions,
            summary,
        },
        seg,
    ))
}
