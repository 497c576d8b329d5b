//! Recording CSV (`t,ax,ay,az,gx,gy,gz`) plus a JSON sidecar with the same
//! basename.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{read_text, write_json, write_text};
use crate::error::{Error, Result};
use crate::signal::{
    DeviceConfig, Exercise, ProcessedRecording, RawRecording, RepLabel, Sample,
};

pub const RECORDING_HEADER: [&str; 7] = ["t", "ax", "ay", "az", "gx", "gy", "gz"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub subject_id: String,
    pub exercise: Exercise,
    pub sampling_rate_hz: f64,
    #[serde(default = "default_accel_range")]
    pub accel_range_g: f64,
    #[serde(default = "default_gyro_range")]
    pub gyro_range_dps: f64,
    pub baselines: [f64; 6],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rep_labels: Option<Vec<RepLabel>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth_bounds: Option<Vec<(usize, usize)>>,
}

fn default_accel_range() -> f64 {
    DeviceConfig::default().accel_range_g
}

fn default_gyro_range() -> f64 {
    DeviceConfig::default().gyro_range_dps
}

impl Sidecar {
    fn of(rec: &RawRecording) -> Self {
        Self {
            subject_id: rec.subject_id.clone(),
            exercise: rec.exercise,
            sampling_rate_hz: rec.device.sampling_rate_hz,
            accel_range_g: rec.device.accel_range_g,
            gyro_range_dps: rec.device.gyro_range_dps,
            baselines: rec.device.baselines,
            rep_labels: rec.rep_labels.clone(),
            ground_truth_bounds: rec.ground_truth_bounds.clone(),
        }
    }
}

/// `session.csv` -> `session.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn save_recording(rec: &RawRecording, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let werr = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
    w.write_record(RECORDING_HEADER).map_err(werr)?;
    for s in &rec.samples {
        let row = [s.t, s.accel[0], s.accel[1], s.accel[2], s.gyro[0], s.gyro[1], s.gyro[2]];
        w.write_record(row.iter().map(|v| v.to_string())).map_err(werr)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    write_text(path, &String::from_utf8(bytes).expect("csv output is utf-8"))?;
    write_json(&sidecar_path(path), &Sidecar::of(rec))
}

pub fn load_recording(path: &Path) -> Result<RawRecording> {
    let side_path = sidecar_path(path);
    if !side_path.exists() {
        return Err(Error::MissingSidecar(side_path));
    }
    let sidecar: Sidecar = serde_json::from_str(&read_text(&side_path)?).map_err(|e| Error::Parse {
        path: side_path.clone(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let text = read_text(path)?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut samples: Vec<Sample> = Vec::new();
    let mut seen_header = false;
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if !seen_header {
            let fields: Vec<&str> = rec.iter().map(str::trim).collect();
            if fields != RECORDING_HEADER {
                return Err(parse_err(
                    line,
                    format!("expected header {:?}", RECORDING_HEADER.join(",")),
                ));
            }
            seen_header = true;
            continue;
        }
        if rec.len() != 7 {
            return Err(parse_err(line, format!("expected 7 columns, found {}", rec.len())));
        }
        let mut v = [0.0; 7];
        for (k, field) in rec.iter().enumerate() {
            v[k] = field.trim().parse::<f64>().map_err(|_| {
                parse_err(line, format!("column {}: cannot parse {field:?}", RECORDING_HEADER[k]))
            })?;
            if !v[k].is_finite() {
                return Err(parse_err(line, format!("column {}: non-finite value", RECORDING_HEADER[k])));
            }
        }
        if let Some(prev) = samples.last() {
            if !(v[0] > prev.t) {
                return Err(Error::NonMonotonic {
                    path: path.to_path_buf(),
                    line,
                });
            }
        }
        samples.push(Sample {
            t: v[0],
            accel: [v[1], v[2], v[3]],
            gyro: [v[4], v[5], v[6]],
        });
    }
    if !seen_header {
        return Err(parse_err(1, "missing header".into()));
    }
    let recording = RawRecording {
        samples,
        subject_id: sidecar.subject_id,
        exercise: sidecar.exercise,
        rep_labels: sidecar.rep_labels,
        ground_truth_bounds: sidecar.ground_truth_bounds,
        device: DeviceConfig {
            sampling_rate_hz: sidecar.sampling_rate_hz,
            accel_range_g: sidecar.accel_range_g,
            gyro_range_dps: sidecar.gyro_range_dps,
            baselines: sidecar.baselines,
        },
    };
    recording.validate()?;
    Ok(recording)
}

/// Normalized channels as CSV (`index` then the nine channels) plus the
/// provenance as JSON next to it.
pub fn write_processed(p: &ProcessedRecording, path: &Path) -> Result<()> {
    let mut out = String::from("index");
    for (c, _) in p.vectors.iter() {
        out.push(',');
        out.push_str(c.as_str());
    }
    out.push('\n');
    for i in 0..p.len() {
        out.push_str(&i.to_string());
        for (_, v) in p.vectors.iter() {
            out.push(',');
            out.push_str(&v[i].to_string());
        }
        out.push('\n');
    }
    write_text(path, &out)?;
    write_json(
        &sidecar_path(path),
        &serde_json::json!({
            "subject_id": p.subject_id,
            "exercise": p.exercise,
            "sampling_rate_hz": p.sampling_rate_hz,
            "provenance": p.provenance,
        }),
    )
}
