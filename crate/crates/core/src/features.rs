//! Per-repetition feature extraction.
//!
//! Each of the nine channels contributes 14 static and 25 dynamic values;
//! the pitch/roll Pearson correlation is appended twice (once under each
//! channel) for a total of 353 columns.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dsp::{self, SPECTRAL_COEFFS, SPECTRUM_POINTS};
use crate::error::{Error, Result};
use crate::signal::{Channel, ChannelSet, Exercise, RepLabel};
use crate::stats;

pub const STATIC_NAMES: [&str; 14] = [
    "mean",
    "median",
    "std",
    "variance",
    "range",
    "kurtosis",
    "skewness",
    "max",
    "min",
    "positive_mean",
    "negative_mean",
    "sum_abs_diff",
    "q1",
    "q3",
];

pub const DYNAMIC_SCALAR_NAMES: [&str; 5] = [
    "energy",
    "energy_ratio",
    "energy_average",
    "harmonic_ratio",
    "energy_entropy",
];

pub const STATIC_LEN: usize = STATIC_NAMES.len();
pub const DYNAMIC_LEN: usize = DYNAMIC_SCALAR_NAMES.len() + SPECTRAL_COEFFS;
pub const PER_CHANNEL_LEN: usize = STATIC_LEN + DYNAMIC_LEN;
pub const REPETITION_FEATURES: usize = 9 * PER_CHANNEL_LEN + 2;
/// Frames used for the energy entropy.
pub const ENTROPY_FRAMES: usize = 10;

/// Ordered, named feature columns plus a version tag. The hash of both is
/// stored in every trained model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub version: String,
    pub names: Vec<String>,
}

impl FeatureSchema {
    /// The 353-column repetition schema.
    pub fn repetition() -> Self {
        let mut names = Vec::with_capacity(REPETITION_FEATURES);
        for c in Channel::ALL {
            for n in STATIC_NAMES {
                names.push(format!("{c}_{n}"));
            }
            for n in DYNAMIC_SCALAR_NAMES {
                names.push(format!("{c}_{n}"));
            }
            for k in 1..=SPECTRAL_COEFFS {
                names.push(format!("{c}_fft{k:02}"));
            }
        }
        names.push("pitch_roll_corr".into());
        names.push("roll_pitch_corr".into());
        Self {
            version: "rep-v1".into(),
            names,
        }
    }

    /// The 25-column chunk schema used by the segmenter.
    pub fn chunk() -> Self {
        let mut names: Vec<String> = ["length", "height", "std", "skewness", "kurtosis"]
            .into_iter()
            .map(String::from)
            .collect();
        names.extend((1..=SPECTRAL_COEFFS).map(|k| format!("fft{k:02}")));
        Self {
            version: "chunk-v1".into(),
            names,
        }
    }

    /// Ad-hoc schema `f0..f{n-1}` for generic numeric datasets.
    pub fn anonymous(n: usize) -> Self {
        Self {
            version: format!("anon-{n}"),
            names: (0..n).map(|i| format!("f{i}")).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Hex SHA-256 (first 16 bytes) over version and names.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.version.as_bytes());
        for n in &self.names {
            h.update([0u8]);
            h.update(n.as_bytes());
        }
        h.finalize()[..16]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: Option<RepLabel>,
    pub subject_id: String,
    pub exercise: Exercise,
}

/// Mean, median, std, variance, range, kurtosis, skewness, max, min,
/// positive mean, negative mean, sum of absolute differences, Q1, Q3.
pub fn static_features(signal: &[f64]) -> Result<[f64; STATIC_LEN]> {
    if signal.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sorted = stats::sorted_copy(signal);
    let mean = stats::mean(signal);
    let variance = stats::variance(signal);
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);

    let (mut pos_sum, mut pos_n, mut neg_sum, mut neg_n) = (0.0, 0usize, 0.0, 0usize);
    for v in signal {
        let d = v - mean;
        if d > 0.0 {
            pos_sum += d;
            pos_n += 1;
        } else if d < 0.0 {
            neg_sum += d;
            neg_n += 1;
        }
    }
    let avg = |s: f64, n: usize| if n == 0 { 0.0 } else { s / n as f64 };
    let sad: f64 = signal.windows(2).map(|w| (w[1] - w[0]).abs()).sum();

    Ok([
        mean,
        stats::quantile_sorted(&sorted, 0.5),
        variance.sqrt(),
        variance,
        max - min,
        stats::kurtosis(signal),
        stats::skewness(signal),
        max,
        min,
        avg(pos_sum, pos_n),
        avg(neg_sum, neg_n),
        sad,
        stats::quantile_sorted(&sorted, 0.25),
        stats::quantile_sorted(&sorted, 0.75),
    ])
}

/// Energy, energy ratio, energy average, harmonic ratio, energy entropy and
/// the 20 leading spectral magnitudes.
pub fn dynamic_features(signal: &[f64]) -> Result<[f64; DYNAMIC_LEN]> {
    if signal.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = signal.len();
    let energy: f64 = signal.iter().map(|v| v * v).sum();

    let spectrum = dsp::resampled_spectrum(signal);
    let power: Vec<f64> = spectrum[..=SPECTRUM_POINTS / 2]
        .iter()
        .map(|c| c.norm_sqr())
        .collect();
    let half_band: f64 = power[1..=SPECTRUM_POINTS / 2].iter().sum();
    let low_band: f64 = power[1..=SPECTRUM_POINTS / 8].iter().sum();
    let energy_ratio = if half_band > 0.0 { low_band / half_band } else { 0.0 };

    let harmonic_ratio = if half_band > 0.0 {
        let f0 = (1..=SPECTRUM_POINTS / 2)
            .max_by(|&a, &b| power[a].total_cmp(&power[b]).then(b.cmp(&a)))
            .unwrap_or(1);
        let harmonics: f64 = (1..=3)
            .map(|h| h * f0)
            .filter(|&k| k <= SPECTRUM_POINTS / 2)
            .map(|k| power[k])
            .sum();
        harmonics / half_band
    } else {
        0.0
    };

    let entropy = if energy > 0.0 {
        (0..ENTROPY_FRAMES)
            .map(|l| {
                let (a, b) = (l * n / ENTROPY_FRAMES, (l + 1) * n / ENTROPY_FRAMES);
                let e = signal[a..b].iter().map(|v| v * v).sum::<f64>() / energy;
                if e > 0.0 {
                    -e * e.log2()
                } else {
                    0.0
                }
            })
            .sum()
    } else {
        0.0
    };

    let mut out = [0.0; DYNAMIC_LEN];
    out[..5].copy_from_slice(&[
        energy,
        energy_ratio,
        energy / n as f64,
        harmonic_ratio,
        entropy,
    ]);
    out[5..].copy_from_slice(&dsp::spectral_coefficients(&spectrum));
    Ok(out)
}

/// Features of one detected repetition (all nine channels).
pub fn repetition_features(slices: &ChannelSet) -> Result<Vec<f64>> {
    let n = slices.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if slices.0.iter().any(|v| v.len() != n) {
        return Err(Error::InvalidArgument(
            "channel slices differ in length".into(),
        ));
    }
    let mut out = Vec::with_capacity(REPETITION_FEATURES);
    for (_, v) in slices.iter() {
        out.extend_from_slice(&static_features(v)?);
        out.extend_from_slice(&dynamic_features(v)?);
    }
    let corr = stats::pearson(&slices[Channel::Pitch], &slices[Channel::Roll]);
    out.push(corr);
    out.push(corr);
    debug_assert!(check_feature_invariants(&out).is_ok());
    Ok(out)
}

pub fn repetition_feature_vector(
    slices: &ChannelSet,
    subject_id: &str,
    exercise: Exercise,
    label: Option<RepLabel>,
) -> Result<FeatureVector> {
    Ok(FeatureVector {
        values: repetition_features(slices)?,
        label,
        subject_id: subject_id.to_string(),
        exercise,
    })
}

/// Structural identities every repetition vector satisfies. Returns the
/// name of the first violated one.
pub fn check_feature_invariants(values: &[f64]) -> std::result::Result<(), String> {
    const TOL: f64 = 1e-9;
    if values.len() != REPETITION_FEATURES {
        return Err(format!("length {}", values.len()));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(format!("non-finite value at {i}"));
    }
    for c in Channel::ALL {
        let f = &values[c.index() * PER_CHANNEL_LEN..(c.index() + 1) * PER_CHANNEL_LEN];
        let (mean, median, std, var, range, max, min, q1, q3) =
            (f[0], f[1], f[2], f[3], f[4], f[7], f[8], f[12], f[13]);
        let scale = max.abs().max(min.abs()).max(1.0);
        let d = &f[STATIC_LEN..];
        let checks = [
            (mean >= min - TOL * scale && mean <= max + TOL * scale, "mean in [min,max]"),
            (q1 <= median + TOL * scale && median <= q3 + TOL * scale, "q1<=median<=q3"),
            ((var - std * std).abs() <= TOL * var.max(1.0), "variance = std^2"),
            ((range - (max - min)).abs() <= TOL * scale, "range = max - min"),
            (
                d[4] >= -TOL && d[4] <= (ENTROPY_FRAMES as f64).log2() + TOL,
                "entropy bounds",
            ),
            ((-TOL..=1.0 + TOL).contains(&d[1]), "energy ratio bounds"),
            ((-TOL..=1.0 + TOL).contains(&d[3]), "harmonic ratio bounds"),
        ];
        if let Some((_, what)) = checks.iter().find(|(ok, _)| !ok) {
            return Err(format!("{c}: {what}"));
        }
    }
    Ok(())
}

pub const CHUNK_FEATURES: usize = 5 + SPECTRAL_COEFFS;

/// Length, height, std, skewness, kurtosis and 20 spectral magnitudes of a
/// candidate chunk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChunkFeatures(pub [f64; CHUNK_FEATURES]);

impl ChunkFeatures {
    pub fn length(&self) -> f64 {
        self.0[0]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn chunk_feature_vector(slice: &[f64]) -> Result<ChunkFeatures> {
    if slice.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (lo, hi) = stats::min_max(slice);
    let mut out = [0.0; CHUNK_FEATURES];
    out[0] = slice.len() as f64;
    out[1] = hi - lo;
    out[2] = stats::std_dev(slice);
    out[3] = stats::skewness(slice);
    out[4] = stats::kurtosis(slice);
    out[5..].copy_from_slice(&dsp::spectral_coefficients(&dsp::resampled_spectrum(slice)));
    Ok(ChunkFeatures(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn schema_shape() {
        let s = FeatureSchema::repetition();
        assert_eq!(s.len(), 353);
        let unique: std::collections::BTreeSet<_> = s.names.iter().collect();
        assert_eq!(unique.len(), 353);
        assert_eq!(s.hash(), FeatureSchema::repetition().hash());
        assert_ne!(s.hash(), FeatureSchema::chunk().hash());
        assert_eq!(FeatureSchema::chunk().len(), CHUNK_FEATURES);
    }

    #[test]
    fn static_one_to_five() {
        let f = static_features(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(f[0], 3.0);
        assert_eq!(f[1], 3.0);
        assert_eq!(f[4], 4.0);
        assert_eq!(f[11], 4.0);
        assert_eq!(f[12], 2.0);
        assert_eq!(f[13], 4.0);
        assert_eq!(f[9], 1.5);
        assert_eq!(f[10], -1.5);
    }

    #[test]
    fn static_constant() {
        let f = static_features(&[0.7; 40]).unwrap();
        assert_eq!(f[3], 0.0);
        assert_eq!(f[5], 0.0);
        assert_eq!(f[6], 0.0);
        assert_eq!(f[9], 0.0);
        assert_eq!(f[10], 0.0);
        assert!(static_features(&[]).is_err());
    }

    #[test]
    fn dynamic_zero_and_impulse() {
        assert!(dynamic_features(&[0.0; 64]).unwrap().iter().all(|&v| v == 0.0));
        let mut x = vec![0.0; 50];
        x[0] = 1.0;
        let d = dynamic_features(&x).unwrap();
        assert_eq!(d[0], 1.0);
        assert_eq!(d[2], 1.0 / 50.0);
        assert!(dynamic_features(&[]).is_err());
    }

    #[test]
    fn harmonic_ratio_of_bin_aligned_sine() {
        let x: Vec<f64> = (0..256)
            .map(|i| (2.0 * PI * 4.0 * i as f64 / 256.0).sin())
            .collect();
        let d = dynamic_features(&x).unwrap();
        assert!(d[3] >= 0.9, "harmonic ratio {}", d[3]);
    }

    #[test]
    fn correlation_entries() {
        let n = 30;
        let ramp: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut set = ChannelSet(std::array::from_fn(|k| {
            (0..n).map(|i| ((i * (k + 1)) as f64 * 0.1).cos()).collect()
        }));
        set[Channel::Pitch] = ramp.clone();
        set[Channel::Roll] = ramp.clone();
        let f = repetition_features(&set).unwrap();
        assert_eq!(f.len(), 353);
        assert!((f[351] - 1.0).abs() < 1e-12 && (f[352] - 1.0).abs() < 1e-12);

        set[Channel::Roll] = ramp.iter().map(|v| -v).collect();
        let f = repetition_features(&set).unwrap();
        assert!((f[351] + 1.0).abs() < 1e-12 && (f[352] + 1.0).abs() < 1e-12);

        set[Channel::Ax].pop();
        assert!(repetition_features(&set).is_err());
    }

    #[test]
    fn chunk_constant_slice() {
        let c = chunk_feature_vector(&[0.3; 100]).unwrap();
        assert_eq!(c.length(), 100.0);
        assert!(c.0[1..].iter().all(|&v| v.abs() < 1e-15), "{:?}", c.0);
        assert!(chunk_feature_vector(&[]).is_err());
    }

    #[test]
    fn chunk_value_symmetric_has_zero_skew() {
        // values mirrored about 0.5: every x has a partner 1 - x
        let half: Vec<f64> = (0..40).map(|i| 0.5 + 0.4 * ((i * i) as f64 * 0.013).sin()).collect();
        let mut x = half.clone();
        x.extend(half.iter().rev().map(|v| 1.0 - v));
        let c = chunk_feature_vector(&x).unwrap();
        assert!(c.0[3].abs() < 1e-9);
    }
}
