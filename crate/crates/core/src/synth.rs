//! Synthetic exercise sessions with exact ground truth.
//!
//! Amplitudes are in normalized units: 1 unit is one standard gravity on an
//! accelerometer axis and 100 deg/s on a gyroscope axis.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{Channel, DeviceConfig, Exercise, RawRecording, RepLabel, Sample, STANDARD_GRAVITY};

pub const GYRO_UNIT_DPS: f64 = 100.0;

fn unit_of(c: Channel) -> f64 {
    if c.index() < 3 {
        STANDARD_GRAVITY
    } else {
        GYRO_UNIT_DPS
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExerciseTemplate {
    pub exercise: Exercise,
    /// Sampled channels carrying a lobe, with its amplitude.
    pub active: Vec<(Channel, f64)>,
    pub duration_s: f64,
    /// Deviant repetitions scale every active amplitude by this factor...
    pub deviant_scale: f64,
    /// ...and add a lobe of this amplitude on the leak channel.
    pub leak_channel: Channel,
    pub leak_amplitude: f64,
}

impl ExerciseTemplate {
    pub fn for_exercise(exercise: Exercise) -> Self {
        use Channel::*;
        let (active, duration_s, leak_channel) = match exercise {
            Exercise::HS => (vec![(Gx, 1.0), (Ay, 0.3)], 4.0, Gz),
            Exercise::SKE => (vec![(Gy, 1.2), (Ax, 0.4)], 3.0, Gz),
            Exercise::IRQ => (vec![(Gy, 0.6), (Az, 0.15)], 2.5, Gx),
            Exercise::SLR => (vec![(Gx, 0.9), (Gz, 0.3), (Az, 0.3)], 3.5, Gy),
        };
        Self {
            exercise,
            active,
            duration_s,
            deviant_scale: 0.6,
            leak_channel,
            leak_amplitude: 0.4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(format!("template: {m}")));
        if self.active.is_empty() {
            return bad("no active channels".into());
        }
        for &(c, a) in self.active.iter().chain([(self.leak_channel, self.leak_amplitude)].iter()) {
            if c.is_derived() {
                return bad(format!("{c} is not a sampled channel"));
            }
            if !(a > 0.0) || !a.is_finite() {
                return bad(format!("amplitude on {c} must be positive"));
            }
        }
        if !(1.0..=10.0).contains(&self.duration_s) {
            return bad(format!("duration {} s outside [1, 10]", self.duration_s));
        }
        if !(self.deviant_scale > 0.0) {
            return bad("deviant scale must be positive".into());
        }
        Ok(())
    }
}

/// Raised-cosine lobe `(1 - cos(2πj/n))/2` over `n` samples with `hold`
/// samples at the peak inserted at the midpoint. `n` is even.
pub fn lobe(n: usize, hold: usize) -> Vec<f64> {
    let half = n / 2;
    let shape = |j: usize| (1.0 - (2.0 * std::f64::consts::PI * j as f64 / n as f64).cos()) / 2.0;
    let mut out = Vec::with_capacity(n + hold);
    out.extend((0..half).map(shape));
    out.extend(std::iter::repeat_n(1.0, hold));
    out.extend((half..n).map(shape));
    out
}

fn even_samples(seconds: f64, fs: f64) -> usize {
    2 * ((seconds * fs / 2.0).round() as usize).max(1)
}

/// One noiseless repetition on the six sampled channels, in sensor units
/// with the device baselines added.
pub fn synth_repetition(
    template: &ExerciseTemplate,
    label: RepLabel,
    hold_s: f64,
    amplitude_scale: f64,
    device: &DeviceConfig,
) -> Result<[Vec<f64>; 6]> {
    template.validate()?;
    if !(hold_s >= 0.0) {
        return Err(Error::InvalidArgument("hold must be non-negative".into()));
    }
    let fs = device.sampling_rate_hz;
    let shape = lobe(
        even_samples(template.duration_s, fs),
        (hold_s * fs).round() as usize,
    );
    let mut amps = [0.0; 6];
    let scale = match label {
        RepLabel::Correct => amplitude_scale,
        RepLabel::Deviant => amplitude_scale * template.deviant_scale,
    };
    for &(c, a) in &template.active {
        amps[c.index()] += a * scale;
    }
    if label == RepLabel::Deviant {
        amps[template.leak_channel.index()] += template.leak_amplitude * amplitude_scale;
    }
    Ok(std::array::from_fn(|k| {
        let a = amps[k] * unit_of(Channel::SAMPLED[k]);
        shape.iter().map(|s| device.baselines[k] + a * s).collect()
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSpec {
    pub template: ExerciseTemplate,
    pub labels: Vec<RepLabel>,
    pub pause_range: (f64, f64),
    pub hold_range: (f64, f64),
    /// White noise standard deviation in normalized units.
    pub noise_sigma: f64,
    /// Sinusoidal strap vibration `(frequency_hz, amplitude)` on every
    /// sampled channel.
    pub vibration: Option<(f64, f64)>,
    /// Per-repetition amplitude multipliers; all ones when absent.
    pub amplitude_scales: Option<Vec<f64>>,
    /// Uniform relative jitter of each repetition's amplitude.
    pub amplitude_jitter: f64,
    /// Uniform relative jitter of each repetition's duration.
    pub duration_jitter: f64,
    pub subject_id: String,
    pub device: DeviceConfig,
    pub seed: u64,
}

impl SessionSpec {
    /// Ten correct repetitions, 1-2 s pauses, no holds, no noise.
    pub fn clean(exercise: Exercise, seed: u64) -> Self {
        Self {
            template: ExerciseTemplate::for_exercise(exercise),
            labels: vec![RepLabel::Correct; 10],
            pause_range: (1.0, 2.0),
            hold_range: (0.0, 0.0),
            noise_sigma: 0.0,
            vibration: None,
            amplitude_scales: None,
            amplitude_jitter: 0.0,
            duration_jitter: 0.0,
            subject_id: format!("synth-{seed}"),
            device: DeviceConfig::default(),
            seed,
        }
    }

    /// Long, irregular pauses and isometric holds.
    pub fn fatigue(mut self) -> Self {
        self.pause_range = (0.5, 5.0);
        self.hold_range = (1.0, 3.0);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.template.validate()?;
        self.device.validate()?;
        let bad = |m: &str| Err(Error::InvalidArgument(format!("session: {m}")));
        let range_ok = |(a, b): (f64, f64)| a >= 0.0 && a <= b && b.is_finite();
        if !range_ok(self.pause_range) || !range_ok(self.hold_range) {
            return bad("ranges must satisfy 0 <= lo <= hi");
        }
        if !(self.noise_sigma >= 0.0) {
            return bad("noise_sigma must be non-negative");
        }
        if !(0.0..1.0).contains(&self.amplitude_jitter) || !(0.0..0.5).contains(&self.duration_jitter) {
            return bad("jitter out of range");
        }
        if let Some(s) = &self.amplitude_scales {
            if s.len() != self.labels.len() || s.iter().any(|v| !(*v >= 0.0)) {
                return bad("amplitude_scales must give one non-negative value per repetition");
            }
        }
        if let Some((f, a)) = self.vibration {
            if !(f > 0.0) || !(a >= 0.0) {
                return bad("vibration needs positive frequency and non-negative amplitude");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Half-open sample ranges.
    pub boundaries: Vec<(usize, usize)>,
    pub labels: Vec<RepLabel>,
    /// Half-open pause ranges, one more than repetitions.
    pub pauses: Vec<(usize, usize)>,
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// Pause, repetition, pause, ..., repetition, pause; then noise and
/// vibration on top.
pub fn synth_session(spec: &SessionSpec) -> Result<(RawRecording, GroundTruth)> {
    spec.validate()?;
    let fs = spec.device.sampling_rate_hz;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut channels: [Vec<f64>; 6] = Default::default();
    let mut boundaries = Vec::with_capacity(spec.labels.len());
    let mut pauses = Vec::with_capacity(spec.labels.len() + 1);
    let mut pos = 0;
    let mut pause = |channels: &mut [Vec<f64>; 6], pos: &mut usize, rng: &mut ChaCha8Rng| {
        let n = ((uniform(rng, spec.pause_range) * fs).round() as usize).max(1);
        for (k, ch) in channels.iter_mut().enumerate() {
            ch.extend(std::iter::repeat_n(spec.device.baselines[k], n));
        }
        pauses.push((*pos, *pos + n));
        *pos += n;
    };
    pause(&mut channels, &mut pos, &mut rng);
    for (r, &label) in spec.labels.iter().enumerate() {
        let hold = uniform(&mut rng, spec.hold_range);
        let amp_jit = 1.0 + spec.amplitude_jitter * rng.random_range(-1.0..=1.0);
        let dur_jit = 1.0 + spec.duration_jitter * rng.random_range(-1.0..=1.0);
        let scale = spec.amplitude_scales.as_ref().map_or(1.0, |s| s[r]) * amp_jit;
        let mut template = spec.template.clone();
        template.duration_s = (template.duration_s * dur_jit).clamp(1.0, 10.0);
        let rep = synth_repetition(&template, label, hold, scale, &spec.device)?;
        let n = rep[0].len();
        for (ch, v) in channels.iter_mut().zip(rep) {
            ch.extend(v);
        }
        boundaries.push((pos, pos + n));
        pos += n;
        pause(&mut channels, &mut pos, &mut rng);
    }

    if spec.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, spec.noise_sigma)
            .map_err(|e| Error::InvalidArgument(format!("noise: {e}")))?;
        for (k, ch) in channels.iter_mut().enumerate() {
            let u = unit_of(Channel::SAMPLED[k]);
            for v in ch.iter_mut() {
                *v += u * normal.sample(&mut rng);
            }
        }
    }
    if let Some((f, a)) = spec.vibration {
        for (k, ch) in channels.iter_mut().enumerate() {
            let u = unit_of(Channel::SAMPLED[k]);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            for (i, v) in ch.iter_mut().enumerate() {
                *v += u * a * (std::f64::consts::TAU * f * i as f64 / fs + phase).sin();
            }
        }
    }

    let samples = (0..pos)
        .map(|i| Sample {
            t: i as f64 / fs,
            accel: [channels[0][i], channels[1][i], channels[2][i]],
            gyro: [channels[3][i], channels[4][i], channels[5][i]],
        })
        .collect();
    let recording = RawRecording {
        samples,
        subject_id: spec.subject_id.clone(),
        exercise: spec.template.exercise,
        rep_labels: Some(spec.labels.clone()),
        ground_truth_bounds: Some(boundaries.clone()),
        device: spec.device.clone(),
    };
    Ok((
        recording,
        GroundTruth {
            boundaries,
            labels: spec.labels.clone(),
            pauses,
        },
    ))
}

/// Labels alternating in blocks: correct/deviant in random order with
/// `deviant` of `n` deviant.
pub fn mixed_labels<R: Rng>(n: usize, deviant: usize, rng: &mut R) -> Vec<RepLabel> {
    use rand::seq::SliceRandom;
    let mut v: Vec<RepLabel> = (0..n)
        .map(|i| if i < deviant { RepLabel::Deviant } else { RepLabel::Correct })
        .collect();
    v.shuffle(rng);
    v
}
