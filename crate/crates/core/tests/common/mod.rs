#![allow(dead_code)]

//! Reference implementations and fixtures shared by the integration tests.
//! Nothing here calls into the library's numeric code.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `|a - b| <= tol * max(1, |b|)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

// ---- brute-force feature reference ----

fn ref_mean(x: &[f64]) -> f64 {
    let mut s = 0.0;
    for v in x {
        s += v;
    }
    s / x.len() as f64
}

fn central_moment(x: &[f64], k: i32) -> f64 {
    let m = ref_mean(x);
    let mut s = 0.0;
    for v in x {
        s += (v - m).powi(k);
    }
    s / x.len() as f64
}

/// Linear interpolation between order statistics at rank `p * (n - 1)`.
fn ref_quantile(x: &[f64], p: f64) -> f64 {
    let mut s = x.to_vec();
    // insertion sort keeps the reference free of library sorting helpers
    for i in 1..s.len() {
        let mut j = i;
        while j > 0 && s[j - 1] > s[j] {
            s.swap(j - 1, j);
            j -= 1;
        }
    }
    let h = p * (s.len() - 1) as f64;
    let lo = h.floor() as usize;
    if lo + 1 >= s.len() {
        return s[s.len() - 1];
    }
    s[lo] + (h - lo as f64) * (s[lo + 1] - s[lo])
}

pub fn ref_static(x: &[f64]) -> Vec<f64> {
    let mean = ref_mean(x);
    let m2 = central_moment(x, 2);
    let (skew, kurt) = if m2 == 0.0 {
        (0.0, 0.0)
    } else {
        (central_moment(x, 3) / m2.powf(1.5), central_moment(x, 4) / (m2 * m2))
    };
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let pos: Vec<f64> = x.iter().map(|v| v - mean).filter(|d| *d > 0.0).collect();
    let neg: Vec<f64> = x.iter().map(|v| v - mean).filter(|d| *d < 0.0).collect();
    let avg = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    let mut sad = 0.0;
    for i in 1..x.len() {
        sad += (x[i] - x[i - 1]).abs();
    }
    vec![
        mean,
        ref_quantile(x, 0.5),
        m2.sqrt(),
        m2,
        max - min,
        kurt,
        skew,
        max,
        min,
        avg(&pos),
        avg(&neg),
        sad,
        ref_quantile(x, 0.25),
        ref_quantile(x, 0.75),
    ]
}

const K: usize = 256;

fn ref_resample(x: &[f64]) -> Vec<f64> {
    if x.len() == 1 {
        return vec![x[0]; K];
    }
    (0..K)
        .map(|i| {
            let t = i as f64 * (x.len() - 1) as f64 / (K - 1) as f64;
            let j = (t as usize).min(x.len() - 2);
            let w = t - j as f64;
            (1.0 - w) * x[j] + w * x[j + 1]
        })
        .collect()
}

/// Direct O(K²) discrete Fourier transform power and magnitude of bins
/// 0..=K/2.
fn ref_dft(y: &[f64]) -> Vec<(f64, f64)> {
    (0..=K / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (n, v) in y.iter().enumerate() {
                let a = -2.0 * PI * ((k * n) % K) as f64 / K as f64;
                re += v * a.cos();
                im += v * a.sin();
            }
            (re, im)
        })
        .collect()
}

pub fn ref_dynamic(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let energy: f64 = x.iter().map(|v| v * v).sum();
    let spec = ref_dft(&ref_resample(x));
    let power: Vec<f64> = spec.iter().map(|(r, i)| r * r + i * i).collect();
    let total: f64 = power[1..].iter().sum();
    let low: f64 = power[1..=K / 8].iter().sum();
    let ratio = if total > 0.0 { low / total } else { 0.0 };
    let harmonic = if total > 0.0 {
        let mut f0 = 1;
        for k in 2..=K / 2 {
            if power[k] > power[f0] {
                f0 = k;
            }
        }
        let mut h = 0.0;
        for m in 1..=3 {
            if m * f0 <= K / 2 {
                h += power[m * f0];
            }
        }
        h / total
    } else {
        0.0
    };
    let mut entropy = 0.0;
    if energy > 0.0 {
        for l in 0..10 {
            let e: f64 = x[l * n / 10..(l + 1) * n / 10].iter().map(|v| v * v).sum::<f64>() / energy;
            if e > 0.0 {
                entropy -= e * e.log2();
            }
        }
    }
    let mut out = vec![energy, ratio, energy / n as f64, harmonic, entropy];
    for k in 1..=20 {
        let (r, i) = spec[k];
        out.push((r * r + i * i).sqrt() / K as f64);
    }
    out
}

pub fn ref_pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (ref_mean(a), ref_mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for i in 0..a.len() {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// The 353-value repetition vector over channels in the order ax, ay, az,
/// gx, gy, gz, mag, pitch, roll.
pub fn ref_repetition(channels: &[Vec<f64>; 9]) -> Vec<f64> {
    let mut out = Vec::new();
    for c in channels {
        out.extend(ref_static(c));
        out.extend(ref_dynamic(c));
    }
    let r = ref_pearson(&channels[7], &channels[8]);
    out.push(r);
    out.push(r);
    out
}

/// Nine random channels of a common random length: smooth lobes plus
/// noise, values in [0, 1].
pub fn random_repetition<R: Rng>(rng: &mut R) -> [Vec<f64>; 9] {
    let n = rng.random_range(40..700);
    let noise = Normal::new(0.0, 0.05).unwrap();
    std::array::from_fn(|_| {
        let amp = rng.random_range(0.1..0.9);
        let cycles = rng.random_range(0.5..4.0);
        let base = rng.random_range(0.0..0.2);
        (0..n)
            .map(|i| {
                let t = i as f64 / n as f64;
                let v = base + amp * (0.5 - 0.5 * (2.0 * PI * cycles * t).cos()) + noise.sample(rng);
                v.clamp(0.0, 1.0)
            })
            .collect()
    })
}

// ---- filter reference ----

/// Magnitude response of the order-`n` Butterworth lowpass obtained by the
/// bilinear transform with the cutoff prewarped.
pub fn bilinear_butterworth_gain(f: f64, fc: f64, fs: f64, order: i32) -> f64 {
    let w = (PI * f / fs).tan() / (PI * fc / fs).tan();
    1.0 / (1.0 + w.powi(2 * order)).sqrt()
}

/// Analog Butterworth magnitude `1 / sqrt(1 + (f/fc)^(2n))`.
pub fn analog_butterworth_gain(f: f64, fc: f64, order: i32) -> f64 {
    1.0 / (1.0 + (f / fc).powi(2 * order)).sqrt()
}

/// Amplitude of the `f` Hz component of `y` (sampled at `fs`) by least
/// squares on a sine/cosine pair.
pub fn fitted_amplitude(y: &[f64], f: f64, fs: f64) -> f64 {
    let (mut ss, mut cc, mut sc, mut ys, mut yc) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, v) in y.iter().enumerate() {
        let a = 2.0 * PI * f * i as f64 / fs;
        let (s, c) = a.sin_cos();
        ss += s * s;
        cc += c * c;
        sc += s * c;
        ys += v * s;
        yc += v * c;
    }
    let det = ss * cc - sc * sc;
    let a = (ys * cc - yc * sc) / det;
    let b = (yc * ss - ys * sc) / det;
    (a * a + b * b).sqrt()
}

// ---- two-class fixtures ----

/// Two Gaussian blobs in `d` dimensions whose means differ by `gap`
/// standard deviations along every axis.
pub fn blobs(n: usize, d: usize, gap: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut r = rng(seed);
    let z = Normal::new(0.0, 1.0).unwrap();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let pos = i % 2 == 0;
        let shift = if pos { gap / 2.0 } else { -gap / 2.0 };
        rows.push((0..d).map(|_| shift + z.sample(&mut r)).collect());
        labels.push(pos);
    }
    (rows, labels)
}
