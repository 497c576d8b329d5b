use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use rehabkit::io::{save_model, save_recording};
use rehabkit::learners::HoeffdingParams;
use rehabkit::pipeline::train_synthetic_segmenter;
use rehabkit::segmentation::SegmentationConfig;
use rehabkit::signal::{Exercise, PreprocessConfig};
use rehabkit::synth::{synth_session, SessionSpec};
use rehabkit_ffi::*;

fn last_error() -> String {
    let p = rk_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn clean_session(dir: &Path) -> (CString, Vec<(usize, usize)>) {
    let mut spec = SessionSpec::clean(Exercise::HS, 3);
    spec.noise_sigma = 0.01;
    let (raw, gt) = synth_session(&spec).unwrap();
    let path = dir.join("hs.csv");
    save_recording(&raw, &path).unwrap();
    (c(path.to_str().unwrap()), gt.boundaries)
}

#[test]
fn segments_a_recording_through_handles() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_synthetic_segmenter(
        120,
        &PreprocessConfig::default(),
        &SegmentationConfig::default(),
        &HoeffdingParams::default(),
        5,
    )
    .unwrap();
    let model_path = dir.path().join("seg.model");
    save_model(&model, &model_path).unwrap();
    let (rec_path, truth) = clean_session(dir.path());

    unsafe {
        let mut rec = ptr::null_mut();
        assert_eq!(rk_recording_load(rec_path.as_ptr(), &mut rec), RkStatus::Ok);
        let mut seg_model = ptr::null_mut();
        let mp = c(model_path.to_str().unwrap());
        assert_eq!(rk_model_load(mp.as_ptr(), &mut seg_model), RkStatus::Ok);
        assert_eq!(rk_model_n_features(seg_model), model.n_features);

        let mut seg = ptr::null_mut();
        assert_eq!(rk_segment(rec, seg_model, 1, &mut seg), RkStatus::Ok);
        assert_eq!(rk_segmentation_count(seg), truth.len());
        for (i, &(ts, te)) in truth.iter().enumerate() {
            let (mut s, mut e) = (0, 0);
            assert_eq!(rk_segmentation_repetition(seg, i, &mut s, &mut e), RkStatus::Ok);
            assert!(s.abs_diff(ts) <= 25 && e.abs_diff(te) <= 25, "{i}: {s}..{e} vs {ts}..{te}");
        }
        let (mut s, mut e) = (0, 0);
        assert_eq!(
            rk_segmentation_repetition(seg, truth.len(), &mut s, &mut e),
            RkStatus::Usage
        );

        let n = rk_repetition_feature_count();
        let mut feats = vec![0.0; n];
        let (a, b) = truth[0];
        assert_eq!(rk_repetition_features(rec, a, b, feats.as_mut_ptr(), n), RkStatus::Ok);
        assert!(feats.iter().all(|v| v.is_finite()));
        assert_eq!(
            rk_repetition_features(rec, a, b, feats.as_mut_ptr(), n - 1),
            RkStatus::Usage
        );

        // a chunk classifier fed a repetition vector is a schema mismatch
        let mut p = 0.0;
        let mut positive = -1;
        assert_eq!(
            rk_model_predict(seg_model, feats.as_ptr(), n, &mut p, &mut positive),
            RkStatus::Model
        );
        assert!(last_error().contains("schema"), "{}", last_error());

        let mut data = ptr::null();
        let mut len = 0;
        let ch = c("mag");
        assert_eq!(rk_recording_channel(rec, ch.as_ptr(), &mut data, &mut len), RkStatus::Ok);
        assert_eq!(len, rk_recording_len(rec));
        let mag = std::slice::from_raw_parts(data, len);
        assert!(mag.iter().all(|v| (0.0..=1.0).contains(v)));
        let bad = c("yaw");
        assert_eq!(rk_recording_channel(rec, bad.as_ptr(), &mut data, &mut len), RkStatus::Usage);

        rk_segmentation_free(seg);
        rk_model_free(seg_model);
        rk_recording_free(rec);
    }
}

#[test]
fn builds_recordings_from_arrays() {
    let (raw, _) = synth_session(&SessionSpec::clean(Exercise::SKE, 9)).unwrap();
    let n = raw.len();
    let t: Vec<f64> = raw.samples.iter().map(|s| s.t).collect();
    let accel: Vec<f64> = raw.samples.iter().flat_map(|s| s.accel).collect();
    let gyro: Vec<f64> = raw.samples.iter().flat_map(|s| s.gyro).collect();
    let ex = c("SKE");
    let subject = c("S01");
    unsafe {
        let mut rec = ptr::null_mut();
        let st = rk_recording_from_samples(
            t.as_ptr(),
            accel.as_ptr(),
            gyro.as_ptr(),
            n,
            raw.device.sampling_rate_hz,
            raw.device.baselines.as_ptr(),
            ex.as_ptr(),
            subject.as_ptr(),
            &mut rec,
        );
        assert_eq!(st, RkStatus::Ok);
        assert_eq!(rk_recording_len(rec), n);
        rk_recording_free(rec);

        let mut t2 = t.clone();
        t2[10] = t2[9];
        let mut rec = ptr::null_mut();
        let st = rk_recording_from_samples(
            t2.as_ptr(),
            accel.as_ptr(),
            gyro.as_ptr(),
            n,
            raw.device.sampling_rate_hz,
            raw.device.baselines.as_ptr(),
            ex.as_ptr(),
            subject.as_ptr(),
            &mut rec,
        );
        assert_eq!(st, RkStatus::Data);
        assert!(rec.is_null());
        assert!(last_error().contains("non-monotonic"), "{}", last_error());

        let knee = c("knee");
        let st = rk_recording_from_samples(
            t.as_ptr(),
            accel.as_ptr(),
            gyro.as_ptr(),
            n,
            raw.device.sampling_rate_hz,
            raw.device.baselines.as_ptr(),
            knee.as_ptr(),
            subject.as_ptr(),
            &mut rec,
        );
        assert_eq!(st, RkStatus::Usage);
    }
}

#[test]
fn status_codes_for_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    unsafe {
        let mut rec = ptr::null_mut();
        assert_eq!(rk_recording_load(ptr::null(), &mut rec), RkStatus::NullPointer);
        let missing = c(dir.path().join("none.csv").to_str().unwrap());
        assert_eq!(rk_recording_load(missing.as_ptr(), &mut rec), RkStatus::Data);
        assert!(rec.is_null());

        let old = dir.path().join("old.model");
        std::fs::write(&old, "REHABKIT-MODEL v0\n---\n{}\n").unwrap();
        let old = c(old.to_str().unwrap());
        let mut m = ptr::null_mut();
        assert_eq!(rk_model_load(old.as_ptr(), &mut m), RkStatus::Model);
        assert!(last_error().contains("version"), "{}", last_error());

        assert_eq!(rk_segment(ptr::null(), ptr::null(), 0, ptr::null_mut()), RkStatus::NullPointer);
        assert_eq!(rk_recording_len(ptr::null()), 0);
        assert_eq!(rk_segmentation_count(ptr::null()), 0);
        rk_recording_free(ptr::null_mut());
        rk_model_free(ptr::null_mut());
        rk_segmentation_free(ptr::null_mut());
    }
}

#[test]
fn segmentation_accuracy_matches_definition() {
    let actual = [10usize, 2];
    let detected = [14usize, 7];
    let mut out = 0.0;
    unsafe {
        assert_eq!(rk_segmentation_accuracy(actual.as_ptr(), detected.as_ptr(), 1, &mut out), RkStatus::Ok);
        assert!((out - 0.6).abs() < 1e-12);
        assert_eq!(rk_segmentation_accuracy(actual[1..].as_ptr(), detected[1..].as_ptr(), 1, &mut out), RkStatus::Ok);
        assert!((out + 1.5).abs() < 1e-12);
        assert_eq!(rk_segmentation_accuracy(actual.as_ptr(), detected.as_ptr(), 0, &mut out), RkStatus::Data);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(rk_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let dir = tempfile::tempdir().unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        r#"#include "rehabkit.h"
int main(void) {
    RkRecording *rec = NULL;
    RkModel *model = NULL;
    RkSegmentation *seg = NULL;
    RkStatus st = rk_recording_load("x.csv", &rec);
    if (st != RK_STATUS_OK) return (int)st;
    st = rk_model_load("m.model", &model);
    st = rk_segment(rec, model, 42u, &seg);
    size_t s, e;
    if (rk_segmentation_count(seg) > 0) rk_segmentation_repetition(seg, 0, &s, &e);
    double feats[400];
    rk_repetition_features(rec, s, e, feats, rk_repetition_feature_count());
    double p; int32_t pos;
    rk_model_predict(model, feats, rk_model_n_features(model), &p, &pos);
    const char *msg = rk_last_error_message();
    (void)msg;
    rk_segmentation_free(seg);
    rk_model_free(model);
    rk_recording_free(rec);
    return st == RK_STATUS_PANIC;
}
"#,
    )
    .unwrap();
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let out = Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(&src)
            .arg("-I")
            .arg(&include)
            .output()
            .expect("C compiler available");
        assert!(out.status.success(), "{compiler}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn c_program_links_and_runs() {
    let dir = tempfile::tempdir().unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let libdir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    assert!(libdir.join("librehabkit_ffi.a").exists(), "{}", libdir.display());
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "rehabkit.h"
int main(void) {
    size_t actual[2] = {10, 10};
    size_t detected[2] = {10, 12};
    double acc = 0.0;
    if (rk_segmentation_accuracy(actual, detected, 2, &acc) != RK_STATUS_OK) return 10;
    RkRecording *rec = NULL;
    RkStatus st = rk_recording_load("/nonexistent/rec.csv", &rec);
    printf("%s %.6f %d %zu\n", rk_version(), acc, (int)st, rk_repetition_feature_count());
    return rec != NULL;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("main");
    let out = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(libdir.join("librehabkit_ffi.a"))
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success());
    let expect = format!(
        "{} 0.900000 2 {}\n",
        env!("CARGO_PKG_VERSION"),
        rk_repetition_feature_count()
    );
    assert_eq!(String::from_utf8_lossy(&run.stdout), expect);
}
