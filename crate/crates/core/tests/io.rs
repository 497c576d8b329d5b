mod common;

use std::fs;
use std::path::Path;

use common::*;
use rand::Rng;
use rehabkit::features::{FeatureSchema, FeatureVector};
use rehabkit::io::*;
use rehabkit::learners::{train, Algorithm, Dataset, HoeffdingParams, TrainConfig};
use rehabkit::pipeline::train_synthetic_segmenter;
use rehabkit::segmentation::SegmentationConfig;
use rehabkit::signal::*;
use rehabkit::synth::{synth_session, SessionSpec};
use rehabkit::Error;

fn noisy_recording(seed: u64) -> RawRecording {
    let mut spec = SessionSpec::clean(Exercise::SKE, seed).fatigue();
    spec.noise_sigma = 0.02;
    spec.vibration = Some((12.0, 0.01));
    synth_session(&spec).unwrap().0
}

fn bits(r: &RawRecording) -> Vec<u64> {
    r.samples
        .iter()
        .flat_map(|s| [s.t].into_iter().chain(s.accel).chain(s.gyro))
        .map(f64::to_bits)
        .collect()
}

#[test]
fn recording_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("session.csv");
    for seed in 0..5 {
        let rec = noisy_recording(seed);
        save_recording(&rec, &path).unwrap();
        assert!(sidecar_path(&path).exists());
        let back = load_recording(&path).unwrap();
        assert_eq!(bits(&back), bits(&rec));
        assert_eq!(back, rec);
    }
}

fn write_session(dir: &Path, csv: &str) -> std::path::PathBuf {
    let rec = noisy_recording(1);
    let path = dir.join("x.csv");
    save_recording(&rec, &path).unwrap();
    fs::write(&path, csv).unwrap();
    path
}

#[test]
fn short_row_names_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_session(
        dir.path(),
        "t,ax,ay,az,gx,gy,gz\n0,0,0,9.8,0,0,0\n0.01,0,0,9.8,0,0\n",
    );
    match load_recording(&path) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn duplicate_timestamp_is_non_monotonic() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_session(
        dir.path(),
        "t,ax,ay,az,gx,gy,gz\n0,0,0,9.8,0,0,0\n0.01,0,0,9.8,0,0,0\n0.01,0,0,9.8,0,0,0\n",
    );
    let err = load_recording(&path).unwrap_err();
    assert!(matches!(err, Error::NonMonotonic { line: 4, .. }), "{err:?}");
    assert!(err.to_string().contains("non-monotonic"));
}

#[test]
fn bad_cells_and_headers() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_session(dir.path(), "t,ax,ay,az,gx,gy,gz\n0,0,zero,9.8,0,0,0\n");
    assert!(matches!(load_recording(&path), Err(Error::Parse { line: 2, .. })));
    let path = write_session(dir.path(), "time,ax,ay,az,gx,gy,gz\n0,0,0,9.8,0,0,0\n");
    assert!(matches!(load_recording(&path), Err(Error::Parse { line: 1, .. })));
}

#[test]
fn missing_sidecar_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lonely.csv");
    fs::write(&path, "t,ax,ay,az,gx,gy,gz\n0,0,0,9.8,0,0,0\n").unwrap();
    assert!(matches!(load_recording(&path), Err(Error::MissingSidecar(_))));
}

fn probes(d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..1000)
        .map(|_| (0..d).map(|_| r.random_range(-6.0..6.0)).collect())
        .collect()
}

fn blob_dataset() -> Dataset {
    let (rows, labels) = blobs(400, 5, 1.5, 12);
    let groups = (0..400).map(|i| format!("s{}", i % 8)).collect();
    Dataset::new(FeatureSchema::anonymous(5), rows, labels, groups).unwrap()
}

#[test]
fn every_model_round_trips_with_identical_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let ds = blob_dataset();
    let mut params = HoeffdingParams::default();
    params.grace_period = 50;
    for algo in [
        Algorithm::Logistic,
        Algorithm::Smo,
        Algorithm::Adaboost,
        Algorithm::RandomForest,
        Algorithm::C45,
        Algorithm::Hoeffding,
    ] {
        let mut cfg = TrainConfig::new(algo, 3);
        cfg.hyperparameters.hoeffding = params.clone();
        let model = train(&ds, &cfg).unwrap();
        let path = dir.path().join(format!("{algo}.model"));
        save_model(&model, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("REHABKIT-MODEL v1\n"));
        let back = load_model(&path).unwrap();
        assert_eq!(model_to_string(&back).unwrap(), text);
        for x in probes(5, 4) {
            let (a, b) = (model.predict(&x).unwrap(), back.predict(&x).unwrap());
            assert_eq!(a.positive, b.positive, "{algo}");
            assert_eq!(a.score.to_bits(), b.score.to_bits(), "{algo}");
        }
    }
}

#[test]
fn segmenter_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_synthetic_segmenter(
        40,
        &PreprocessConfig::default(),
        &SegmentationConfig::default(),
        &HoeffdingParams::default(),
        2,
    )
    .unwrap();
    let path = dir.path().join("seg.model");
    save_model(&model, &path).unwrap();
    let back = load_model(&path).unwrap();
    assert!(back.check_schema(&FeatureSchema::chunk()).is_ok());
    for x in probes(model.n_features, 5) {
        assert_eq!(model.predict(&x).unwrap(), back.predict(&x).unwrap());
    }
}

#[test]
fn version_truncation_and_schema_errors() {
    let dir = tempfile::tempdir().unwrap();
    let model = train(&blob_dataset(), &TrainConfig::new(Algorithm::C45, 0)).unwrap();
    let text = model_to_string(&model).unwrap();

    let path = dir.path().join("old.model");
    fs::write(&path, text.replacen("REHABKIT-MODEL v1", "REHABKIT-MODEL v0", 1)).unwrap();
    let err = load_model(&path).unwrap_err();
    assert!(matches!(err, Error::ModelVersion(ref v) if v == "v0"), "{err:?}");

    for cut in [10, text.len() / 3, text.len() - 5] {
        let path = dir.path().join("cut.model");
        fs::write(&path, &text[..cut]).unwrap();
        assert!(matches!(load_model(&path), Err(Error::ModelFormat(_))), "cut at {cut}");
    }

    let path = dir.path().join("tampered.model");
    fs::write(&path, text.replacen("seed: 0", "seed: 1", 1)).unwrap();
    assert!(matches!(load_model(&path), Err(Error::ModelFormat(_))));

    let back = load_model(&{
        let p = dir.path().join("ok.model");
        save_model(&model, &p).unwrap();
        p
    })
    .unwrap();
    assert!(matches!(
        back.check_schema(&FeatureSchema::repetition()),
        Err(Error::SchemaMismatch { .. })
    ));
    assert!(matches!(back.predict(&[0.0; 4]), Err(Error::SchemaMismatch { .. })));
    assert!(matches!(
        load_model(&dir.path().join("absent.model")),
        Err(Error::Io { .. })
    ));
}

#[test]
fn feature_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let n = FeatureSchema::repetition().len();
    let mut r = rng(6);
    let vectors: Vec<FeatureVector> = (0..25)
        .map(|i| FeatureVector {
            values: (0..n).map(|_| r.random_range(-1e3..1e3) * r.random::<f64>()).collect(),
            label: match i % 3 {
                0 => Some(RepLabel::Correct),
                1 => Some(RepLabel::Deviant),
                _ => None,
            },
            subject_id: format!("p{}", i % 4),
            exercise: Exercise::IRQ,
        })
        .collect();
    let path = dir.path().join("features.csv");
    write_feature_csv(&path, &vectors).unwrap();
    let back = read_feature_csv(&path).unwrap();
    assert_eq!(back.len(), vectors.len());
    for (a, b) in back.iter().zip(&vectors) {
        assert_eq!(a.label, b.label);
        assert_eq!(a.subject_id, b.subject_id);
        assert_eq!(a.exercise, b.exercise);
        assert!(a.values.iter().zip(&b.values).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    let short = FeatureVector { values: vec![0.0; 3], ..vectors[0].clone() };
    assert!(matches!(write_feature_csv(&path, &[short]), Err(Error::SchemaMismatch { .. })));
}
