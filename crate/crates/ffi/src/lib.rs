//! C ABI over `rehabkit`.
//!
//! Every fallible function returns an `RkStatus`; on failure a message is
//! kept per thread and read back with `rk_last_error_message`. Objects
//! cross the boundary as opaque pointers and are released with the matching
//! `*_free` function. Output pointers are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use rehabkit::features::{repetition_features, FeatureSchema};
use rehabkit::io::{load_model, load_recording};
use rehabkit::learners::Model;
use rehabkit::segmentation::{
    segmentation_accuracy, select_cut_points, SegmentationConfig, SegmentationResult,
};
use rehabkit::signal::{
    preprocess, Channel, DeviceConfig, Exercise, PreprocessConfig, ProcessedRecording,
    RawRecording, Sample,
};
use rehabkit::{Error, ErrorKind};

/// Status codes. 1-3 mirror the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RkStatus {
    Ok = 0,
    /// Invalid argument or configuration.
    Usage = 1,
    /// Bad or unusable input data.
    Data = 2,
    /// Model missing, malformed, of another version or schema.
    Model = 3,
    /// A required pointer argument was null.
    NullPointer = 4,
    /// Internal panic caught at the boundary.
    Panic = 5,
}

/// A preprocessed recording.
pub struct RkRecording(ProcessedRecording);

/// A trained model (repetition classifier or chunk classifier).
pub struct RkModel(Model);

/// Output of `rk_segment`.
pub struct RkSegmentation(SegmentationResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(RkStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.kind() {
            ErrorKind::Usage => RkStatus::Usage,
            ErrorKind::Data => RkStatus::Data,
            ErrorKind::Model => RkStatus::Model,
        };
        Failure(status, e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(RkStatus::NullPointer, format!("{name} is null"))
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure(RkStatus::Usage, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RkStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            RkStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn as_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| usage(format!("{name} is not valid UTF-8")))
}

unsafe fn as_slice<'a, T>(p: *const T, n: usize, name: &str) -> Result<&'a [T], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn put<T>(out: *mut T, v: T) {
    out.write(v);
}

/// Message of the last failed call on this thread, or null if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Number of values written by `rk_repetition_features`.
#[no_mangle]
pub extern "C" fn rk_repetition_feature_count() -> usize {
    FeatureSchema::repetition().len()
}

/// Loads a recording CSV (with its JSON sidecar) and preprocesses it with
/// the default settings.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rk_recording_load(
    path: *const c_char,
    out: *mut *mut RkRecording,
) -> RkStatus {
    guard(|| {
        let path = as_str(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let raw = load_recording(Path::new(path))?;
        let p = preprocess(&raw, &PreprocessConfig::default())?;
        put(out, Box::into_raw(Box::new(RkRecording(p))));
        Ok(())
    })
}

/// Builds and preprocesses a recording from `n` samples. `accel` and `gyro`
/// hold `3 * n` interleaved x, y, z values (m/s², deg/s); `baselines` holds
/// the six resting readings in the same units. `exercise` is one of "HS",
/// "SKE", "IRQ", "SLR".
///
/// # Safety
/// Array arguments must point to at least the stated number of doubles.
#[no_mangle]
pub unsafe extern "C" fn rk_recording_from_samples(
    t: *const f64,
    accel: *const f64,
    gyro: *const f64,
    n: usize,
    sampling_rate_hz: f64,
    baselines: *const f64,
    exercise: *const c_char,
    subject_id: *const c_char,
    out: *mut *mut RkRecording,
) -> RkStatus {
    guard(|| {
        let t = as_slice(t, n, "t")?;
        let accel = as_slice(accel, 3 * n, "accel")?;
        let gyro = as_slice(gyro, 3 * n, "gyro")?;
        let baselines = as_slice(baselines, 6, "baselines")?;
        let exercise: Exercise = as_str(exercise, "exercise")?.parse()?;
        let subject_id = as_str(subject_id, "subject_id")?.to_string();
        if out.is_null() {
            return Err(null("out"));
        }
        let samples = (0..n)
            .map(|i| Sample {
                t: t[i],
                accel: [accel[3 * i], accel[3 * i + 1], accel[3 * i + 2]],
                gyro: [gyro[3 * i], gyro[3 * i + 1], gyro[3 * i + 2]],
            })
            .collect();
        let device = DeviceConfig {
            sampling_rate_hz,
            baselines: baselines.try_into().expect("six baselines"),
            ..DeviceConfig::default()
        };
        let raw = RawRecording {
            samples,
            subject_id,
            exercise,
            rep_labels: None,
            ground_truth_bounds: None,
            device,
        };
        raw.validate()?;
        let p = preprocess(&raw, &PreprocessConfig::default())?;
        put(out, Box::into_raw(Box::new(RkRecording(p))));
        Ok(())
    })
}

/// Sample count, or 0 for a null handle.
///
/// # Safety
/// `rec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rk_recording_len(rec: *const RkRecording) -> usize {
    rec.as_ref().map_or(0, |r| r.0.len())
}

/// Borrows one normalized channel. `channel` is one of "ax", "ay", "az",
/// "gx", "gy", "gz", "mag", "pitch", "roll". The data lives as long as the
/// recording.
///
/// # Safety
/// `rec` must be a live handle; `data` and `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rk_recording_channel(
    rec: *const RkRecording,
    channel: *const c_char,
    data: *mut *const f64,
    len: *mut usize,
) -> RkStatus {
    guard(|| {
        let rec = as_ref(rec, "rec")?;
        let channel: Channel = as_str(channel, "channel")?.parse()?;
        if data.is_null() || len.is_null() {
            return Err(null("output"));
        }
        let s = rec.0.channel(channel);
        put(data, s.as_ptr());
        put(len, s.len());
        Ok(())
    })
}

/// # Safety
/// `rec` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rk_recording_free(rec: *mut RkRecording) {
    if !rec.is_null() {
        drop(Box::from_raw(rec));
    }
}

/// Repetition features of samples `start..end` into `out`, which must hold
/// `rk_repetition_feature_count` values.
///
/// # Safety
/// `rec` must be a live handle; `out` must point to `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rk_repetition_features(
    rec: *const RkRecording,
    start: usize,
    end: usize,
    out: *mut f64,
    out_len: usize,
) -> RkStatus {
    guard(|| {
        let rec = as_ref(rec, "rec")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let need = FeatureSchema::repetition().len();
        if out_len < need {
            return Err(usage(format!("output holds {out_len} values, need {need}")));
        }
        if start >= end || end > rec.0.len() {
            return Err(usage(format!(
                "range {start}..{end} outside recording of {} samples",
                rec.0.len()
            )));
        }
        let values = repetition_features(&rec.0.vectors.slice(start, end))?;
        std::slice::from_raw_parts_mut(out, need).copy_from_slice(&values);
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rk_model_load(path: *const c_char, out: *mut *mut RkModel) -> RkStatus {
    guard(|| {
        let path = as_str(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let m = load_model(Path::new(path))?;
        put(out, Box::into_raw(Box::new(RkModel(m))));
        Ok(())
    })
}

/// Input width the model expects, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rk_model_n_features(model: *const RkModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.n_features)
}

/// Classifies one feature vector. `p_positive` receives the probability of
/// the positive class (deviant repetition, or repetition for a chunk
/// classifier), `positive` receives 1 or 0. Either output may be null.
///
/// # Safety
/// `model` must be a live handle; `x` must point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn rk_model_predict(
    model: *const RkModel,
    x: *const f64,
    n: usize,
    p_positive: *mut f64,
    positive: *mut i32,
) -> RkStatus {
    guard(|| {
        let model = as_ref(model, "model")?;
        let x = as_slice(x, n, "x")?;
        let p = model.0.predict(x)?;
        if !p_positive.is_null() {
            put(p_positive, p.p_positive());
        }
        if !positive.is_null() {
            put(positive, i32::from(p.positive));
        }
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rk_model_free(model: *mut RkModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Segments a recording with a chunk classifier and default settings.
/// Too few resting samples is not an error: the result is empty.
///
/// # Safety
/// `rec` and `segmenter` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rk_segment(
    rec: *const RkRecording,
    segmenter: *const RkModel,
    seed: u64,
    out: *mut *mut RkSegmentation,
) -> RkStatus {
    guard(|| {
        let rec = as_ref(rec, "rec")?;
        let seg = as_ref(segmenter, "segmenter")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = select_cut_points(&rec.0, &seg.0, &SegmentationConfig::default(), seed)?;
        put(out, Box::into_raw(Box::new(RkSegmentation(r))));
        Ok(())
    })
}

/// Number of detected repetitions, or 0 for a null handle.
///
/// # Safety
/// `seg` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rk_segmentation_count(seg: *const RkSegmentation) -> usize {
    seg.as_ref().map_or(0, |s| s.0.repetitions.len())
}

/// Sample range `[start, end)` of repetition `i`.
///
/// # Safety
/// `seg` must be a live handle; `start` and `end` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rk_segmentation_repetition(
    seg: *const RkSegmentation,
    i: usize,
    start: *mut usize,
    end: *mut usize,
) -> RkStatus {
    guard(|| {
        let seg = as_ref(seg, "seg")?;
        if start.is_null() || end.is_null() {
            return Err(null("output"));
        }
        let &(s, e) = seg
            .0
            .repetitions
            .get(i)
            .ok_or_else(|| usage(format!("repetition {i} out of range")))?;
        put(start, s);
        put(end, e);
        Ok(())
    })
}

/// # Safety
/// `seg` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rk_segmentation_free(seg: *mut RkSegmentation) {
    if !seg.is_null() {
        drop(Box::from_raw(seg));
    }
}

/// Mean segmentation accuracy over `n` recordings given true and detected
/// repetition counts.
///
/// # Safety
/// `actual` and `detected` must point to `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rk_segmentation_accuracy(
    actual: *const usize,
    detected: *const usize,
    n: usize,
    out: *mut f64,
) -> RkStatus {
    guard(|| {
        let a = as_slice(actual, n, "actual")?;
        let d = as_slice(detected, n, "detected")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cases: Vec<(usize, usize)> = a.iter().copied().zip(d.iter().copied()).collect();
        put(out, segmentation_accuracy(&cases)?);
        Ok(())
    })
}
