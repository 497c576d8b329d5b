//! Raw and processed IMU recordings: channel derivation, smoothing and
//! per-recording min-max normalization.

use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dsp;
use crate::error::{Error, Result};

pub const STANDARD_GRAVITY: f64 = 9.80665;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Exercise {
    /// Heel slide.
    HS,
    /// Seated knee extension.
    SKE,
    /// Inner range quadriceps.
    IRQ,
    /// Straight leg raise.
    SLR,
}

impl Exercise {
    pub const ALL: [Exercise; 4] = [Exercise::HS, Exercise::SKE, Exercise::IRQ, Exercise::SLR];

    pub fn as_str(self) -> &'static str {
        match self {
            Exercise::HS => "HS",
            Exercise::SKE => "SKE",
            Exercise::IRQ => "IRQ",
            Exercise::SLR => "SLR",
        }
    }
}

impl fmt::Display for Exercise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Exercise {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "HS" => Ok(Exercise::HS),
            "SKE" => Ok(Exercise::SKE),
            "IRQ" => Ok(Exercise::IRQ),
            "SLR" => Ok(Exercise::SLR),
            _ => Err(Error::InvalidArgument(format!("unknown exercise {s:?}"))),
        }
    }
}

/// Binary repetition label. `Deviant` is the positive class everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepLabel {
    Correct,
    Deviant,
}

impl RepLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            RepLabel::Correct => "correct",
            RepLabel::Deviant => "deviant",
        }
    }

    pub fn is_positive(self) -> bool {
        self == RepLabel::Deviant
    }

    pub fn flipped(self) -> Self {
        match self {
            RepLabel::Correct => RepLabel::Deviant,
            RepLabel::Deviant => RepLabel::Correct,
        }
    }
}

impl fmt::Display for RepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RepLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "correct" => Ok(RepLabel::Correct),
            "deviant" => Ok(RepLabel::Deviant),
            _ => Err(Error::InvalidArgument(format!("unknown label {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Ax,
    Ay,
    Az,
    Gx,
    Gy,
    Gz,
    Mag,
    Pitch,
    Roll,
}

impl Channel {
    pub const ALL: [Channel; 9] = [
        Channel::Ax,
        Channel::Ay,
        Channel::Az,
        Channel::Gx,
        Channel::Gy,
        Channel::Gz,
        Channel::Mag,
        Channel::Pitch,
        Channel::Roll,
    ];

    pub const SAMPLED: [Channel; 6] = [
        Channel::Ax,
        Channel::Ay,
        Channel::Az,
        Channel::Gx,
        Channel::Gy,
        Channel::Gz,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_derived(self) -> bool {
        matches!(self, Channel::Mag | Channel::Pitch | Channel::Roll)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Ax => "ax",
            Channel::Ay => "ay",
            Channel::Az => "az",
            Channel::Gx => "gx",
            Channel::Gy => "gy",
            Channel::Gz => "gz",
            Channel::Mag => "mag",
            Channel::Pitch => "pitch",
            Channel::Roll => "roll",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Channel::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown channel {s:?}")))
    }
}

/// Nine equal-length vectors indexed by [`Channel`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChannelSet(pub [Vec<f64>; 9]);

impl ChannelSet {
    pub fn len(&self) -> usize {
        self.0[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Copy of `[start, end)` on every channel.
    pub fn slice(&self, start: usize, end: usize) -> ChannelSet {
        ChannelSet(std::array::from_fn(|i| self.0[i][start..end].to_vec()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Channel, &[f64])> {
        Channel::ALL.into_iter().map(|c| (c, self.0[c.index()].as_slice()))
    }
}

impl Index<Channel> for ChannelSet {
    type Output = Vec<f64>;

    fn index(&self, c: Channel) -> &Vec<f64> {
        &self.0[c.index()]
    }
}

impl IndexMut<Channel> for ChannelSet {
    fn index_mut(&mut self, c: Channel) -> &mut Vec<f64> {
        &mut self.0[c.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceConfig {
    pub sampling_rate_hz: f64,
    pub accel_range_g: f64,
    pub gyro_range_dps: f64,
    /// Gravity-only readings for ax, ay, az (m/s²) and gx, gy, gz (deg/s).
    pub baselines: [f64; 6],
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self {
            sampling_rate_hz: 102.4,
            accel_range_g: 2.0,
            gyro_range_dps: 500.0,
            baselines: [0.0, 0.0, STANDARD_GRAVITY, 0.0, 0.0, 0.0],
        }
    }
}

impl DeviceConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.sampling_rate_hz)
            || !positive(self.accel_range_g)
            || !positive(self.gyro_range_dps)
        {
            return Err(Error::InvalidRecording(
                "sampling rate and sensor ranges must be positive".into(),
            ));
        }
        if self.baselines.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidRecording("non-finite baseline".into()));
        }
        Ok(())
    }
}

/// One timestamped 6-axis sample: acceleration in m/s², angular velocity in
/// deg/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub accel: [f64; 3],
    pub gyro: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawRecording {
    pub samples: Vec<Sample>,
    pub subject_id: String,
    pub exercise: Exercise,
    pub rep_labels: Option<Vec<RepLabel>>,
    pub ground_truth_bounds: Option<Vec<(usize, usize)>>,
    pub device: DeviceConfig,
}

impl RawRecording {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Checks timestamp monotonicity, sample spacing (within 1% of the
    /// nominal period) and ground-truth bound ordering.
    pub fn validate(&self) -> Result<()> {
        self.device.validate()?;
        let period = 1.0 / self.device.sampling_rate_hz;
        for (i, w) in self.samples.windows(2).enumerate() {
            let dt = w[1].t - w[0].t;
            if !(dt > 0.0) {
                return Err(Error::InvalidRecording(format!(
                    "non-monotonic timestamp at sample {}",
                    i + 1
                )));
            }
            if (dt - period).abs() > 0.01 * period {
                return Err(Error::InvalidRecording(format!(
                    "sample spacing {dt} at sample {} deviates from 1/{} s by more than 1%",
                    i + 1,
                    self.device.sampling_rate_hz
                )));
            }
        }
        if let Some(bounds) = &self.ground_truth_bounds {
            let mut prev_end = 0;
            for &(s, e) in bounds {
                if s >= e || s < prev_end || e > self.samples.len() {
                    return Err(Error::InvalidRecording(format!(
                        "ground-truth bound ({s}, {e}) is unsorted, overlapping or out of range"
                    )));
                }
                prev_end = e;
            }
            if let Some(labels) = &self.rep_labels {
                if labels.len() != bounds.len() {
                    return Err(Error::InvalidRecording(
                        "rep_labels and ground_truth_bounds differ in length".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Which sensor's Euclidean norm the MAG channel carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MagnitudeSource {
    #[default]
    Gyro,
    Accel,
}

fn magnitude(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn pitch(a: [f64; 3]) -> f64 {
    (-a[0]).atan2((a[1] * a[1] + a[2] * a[2]).sqrt())
}

fn roll(a: [f64; 3]) -> f64 {
    a[1].atan2(a[2])
}

/// The six sampled vectors plus magnitude, pitch and roll (radians).
pub fn derive_channels(raw: &RawRecording, source: MagnitudeSource) -> Result<ChannelSet> {
    if raw.samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = raw.samples.len();
    let mut set = ChannelSet(std::array::from_fn(|_| Vec::with_capacity(n)));
    for s in &raw.samples {
        for k in 0..3 {
            set.0[k].push(s.accel[k]);
            set.0[3 + k].push(s.gyro[k]);
        }
        let m = match source {
            MagnitudeSource::Gyro => magnitude(s.gyro),
            MagnitudeSource::Accel => magnitude(s.accel),
        };
        set[Channel::Mag].push(m);
        set[Channel::Pitch].push(pitch(s.accel));
        set[Channel::Roll].push(roll(s.accel));
    }
    Ok(set)
}

/// Device baselines carried through the same derivation as the signals.
pub fn derived_baselines(device: &DeviceConfig, source: MagnitudeSource) -> [f64; 9] {
    let b = device.baselines;
    let accel = [b[0], b[1], b[2]];
    let gyro = [b[3], b[4], b[5]];
    let mag = match source {
        MagnitudeSource::Gyro => magnitude(gyro),
        MagnitudeSource::Accel => magnitude(accel),
    };
    [b[0], b[1], b[2], b[3], b[4], b[5], mag, pitch(accel), roll(accel)]
}

/// Maps `signal` onto [0, 1]. A constant signal maps to all zeros.
pub fn minmax_normalize(signal: &[f64]) -> Result<Vec<f64>> {
    Ok(normalize_with_bounds(signal)?.0)
}

fn normalize_with_bounds(signal: &[f64]) -> Result<(Vec<f64>, (f64, f64))> {
    if signal.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (lo, hi) = crate::stats::min_max(signal);
    let range = hi - lo;
    let out = if range > 0.0 {
        signal
            .iter()
            .map(|v| ((v - lo) / range).clamp(0.0, 1.0))
            .collect()
    } else {
        vec![0.0; signal.len()]
    };
    Ok((out, (lo, hi)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub cutoff_hz: f64,
    pub order: usize,
    pub magnitude: MagnitudeSource,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            cutoff_hz: 5.0,
            order: 4,
            magnitude: MagnitudeSource::Gyro,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub cutoff_hz: f64,
    pub order: usize,
    pub magnitude: MagnitudeSource,
    /// Filtered (min, max) per channel, in channel order.
    pub bounds: [(f64, f64); 9],
    /// Device baseline per channel in raw channel units.
    pub baselines: [f64; 9],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedRecording {
    pub vectors: ChannelSet,
    pub provenance: Provenance,
    pub subject_id: String,
    pub exercise: Exercise,
    pub sampling_rate_hz: f64,
    pub rep_labels: Option<Vec<RepLabel>>,
    pub ground_truth_bounds: Option<Vec<(usize, usize)>>,
}

impl ProcessedRecording {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn channel(&self, c: Channel) -> &[f64] {
        &self.vectors[c]
    }

    /// The device baseline of `c` mapped through that channel's
    /// normalization. May fall outside [0, 1].
    pub fn baseline_norm(&self, c: Channel) -> f64 {
        let (lo, hi) = self.provenance.bounds[c.index()];
        let b = self.provenance.baselines[c.index()];
        if hi > lo {
            (b - lo) / (hi - lo)
        } else {
            0.0
        }
    }
}

/// Derive, zero-phase filter, then min-max normalize every channel.
pub fn preprocess(raw: &RawRecording, config: &PreprocessConfig) -> Result<ProcessedRecording> {
    if raw.samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    raw.validate()?;
    let fs = raw.device.sampling_rate_hz;
    let filter = dsp::Butterworth::design(config.order, config.cutoff_hz, fs)?;
    let derived = derive_channels(raw, config.magnitude)?;
    let mut bounds = [(0.0, 0.0); 9];
    let mut vectors = ChannelSet::default();
    for (c, v) in derived.iter() {
        let smoothed = filter.filtfilt(v)?;
        let (norm, b) = normalize_with_bounds(&smoothed)?;
        bounds[c.index()] = b;
        vectors[c] = norm;
    }
    Ok(ProcessedRecording {
        vectors,
        provenance: Provenance {
            cutoff_hz: config.cutoff_hz,
            order: config.order,
            magnitude: config.magnitude,
            bounds,
            baselines: derived_baselines(&raw.device, config.magnitude),
        },
        subject_id: raw.subject_id.clone(),
        exercise: raw.exercise,
        sampling_rate_hz: fs,
        rep_labels: raw.rep_labels.clone(),
        ground_truth_bounds: raw.ground_truth_bounds.clone(),
    })
}
