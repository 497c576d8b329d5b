//! Butterworth low-pass filtering and fixed-length spectral summaries.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Length every slice is resampled to before its spectrum is taken.
pub const SPECTRUM_POINTS: usize = 256;
/// Number of leading non-DC spectral magnitudes kept as features.
pub const SPECTRAL_COEFFS: usize = 20;

/// One second-order section in transposed direct form II.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    /// State that makes a constant input `c` pass through with no transient.
    fn steady_state(&self, c: f64) -> [f64; 2] {
        let s2 = (self.b[2] - self.a[1]) * c;
        let s1 = (self.b[1] - self.a[0]) * c + s2;
        [s1, s2]
    }

    fn run(&self, x: &mut [f64], mut s: [f64; 2]) {
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        for v in x.iter_mut() {
            let input = *v;
            let y = b0 * input + s[0];
            s[0] = b1 * input - a1 * y + s[1];
            s[1] = b2 * input - a2 * y;
            *v = y;
        }
    }
}

/// Digital Butterworth low-pass designed by the bilinear transform with
/// cutoff prewarping, realised as cascaded second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct Butterworth {
    order: usize,
    cutoff_hz: f64,
    fs_hz: f64,
    sections: Vec<Biquad>,
}

impl Butterworth {
    pub fn design(order: usize, cutoff_hz: f64, fs_hz: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument("filter order must be positive".into()));
        }
        if !(fs_hz > 0.0) || !(cutoff_hz > 0.0) {
            return Err(Error::InvalidArgument(
                "cutoff and sampling rate must be positive".into(),
            ));
        }
        if cutoff_hz >= fs_hz / 2.0 {
            return Err(Error::InvalidArgument(format!(
                "cutoff {cutoff_hz} Hz is not below Nyquist ({} Hz)",
                fs_hz / 2.0
            )));
        }
        let k = (PI * cutoff_hz / fs_hz).tan();
        let k2 = k * k;
        let mut sections = Vec::with_capacity(order.div_ceil(2));
        for i in 0..order / 2 {
            // pole pair i of the analog prototype
            let q = 1.0 / (2.0 * (PI * (2 * i + 1) as f64 / (2 * order) as f64).sin());
            let norm = 1.0 / (1.0 + k / q + k2);
            let b0 = k2 * norm;
            sections.push(Biquad {
                b: [b0, 2.0 * b0, b0],
                a: [2.0 * (k2 - 1.0) * norm, (1.0 - k / q + k2) * norm],
            });
        }
        if order % 2 == 1 {
            let b0 = k / (1.0 + k);
            sections.push(Biquad {
                b: [b0, b0, 0.0],
                a: [(k - 1.0) / (k + 1.0), 0.0],
            });
        }
        Ok(Self {
            order,
            cutoff_hz,
            fs_hz,
            sections,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn cutoff_hz(&self) -> f64 {
        self.cutoff_hz
    }

    /// Magnitude response of the designed digital filter at `freq_hz`.
    pub fn magnitude_response(&self, freq_hz: f64) -> f64 {
        let ratio = (PI * freq_hz / self.fs_hz).tan() / (PI * self.cutoff_hz / self.fs_hz).tan();
        1.0 / (1.0 + ratio.powi(2 * self.order as i32)).sqrt()
    }

    /// Single causal pass, state initialised to the steady state of `x[0]`.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        self.filter_in_place(&mut y);
        y
    }

    fn filter_in_place(&self, y: &mut [f64]) {
        let Some(&first) = y.first() else { return };
        for s in &self.sections {
            // every section has unity DC gain, so the steady state of each
            // stage is driven by the same constant
            s.run(y, s.steady_state(first));
        }
    }

    /// Zero-phase forward-backward application. The signal is extended at
    /// both ends by odd reflection about the edge value (`3 * order`
    /// samples) to suppress start-up transients, and the result is averaged
    /// with the backward-forward pass.
    pub fn filtfilt(&self, x: &[f64]) -> Result<Vec<f64>> {
        let min_len = 3 * self.order;
        if x.len() < min_len.max(2) {
            return Err(Error::InvalidArgument(format!(
                "signal of length {} is too short to filter (need {})",
                x.len(),
                min_len.max(2)
            )));
        }
        let pad = min_len.min(x.len() - 1);
        let n = x.len();
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        // forward-backward and backward-forward differ only through the
        // start-up state at each end; their mean is exactly symmetric under
        // time reversal
        let mut rev: Vec<f64> = ext.iter().rev().copied().collect();
        self.filter_in_place(&mut ext);
        ext.reverse();
        self.filter_in_place(&mut ext);
        ext.reverse();
        self.filter_in_place(&mut rev);
        rev.reverse();
        self.filter_in_place(&mut rev);
        Ok((pad..pad + n).map(|i| 0.5 * (ext[i] + rev[i])).collect())
    }
}

/// Zero-phase Butterworth low-pass of `signal`.
pub fn butterworth_lowpass(
    signal: &[f64],
    cutoff_hz: f64,
    order: usize,
    fs_hz: f64,
) -> Result<Vec<f64>> {
    Butterworth::design(order, cutoff_hz, fs_hz)?.filtfilt(signal)
}

/// Linear-interpolation resampling onto `len` evenly spaced points spanning
/// the first to the last sample.
pub fn resample_linear(x: &[f64], len: usize) -> Vec<f64> {
    match x.len() {
        0 => vec![0.0; len],
        1 => vec![x[0]; len],
        n => {
            let step = (n - 1) as f64 / (len - 1) as f64;
            (0..len)
                .map(|i| {
                    let pos = i as f64 * step;
                    let lo = (pos.floor() as usize).min(n - 2);
                    let frac = pos - lo as f64;
                    x[lo] + frac * (x[lo + 1] - x[lo])
                })
                .collect()
        }
    }
}

fn fft_256() -> &'static Arc<dyn Fft<f64>> {
    static PLAN: OnceLock<Arc<dyn Fft<f64>>> = OnceLock::new();
    PLAN.get_or_init(|| FftPlanner::new().plan_fft_forward(SPECTRUM_POINTS))
}

/// Complex spectrum of `x` resampled to [`SPECTRUM_POINTS`] samples.
pub fn resampled_spectrum(x: &[f64]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = resample_linear(x, SPECTRUM_POINTS)
        .into_iter()
        .map(|v| Complex::new(v, 0.0))
        .collect();
    fft_256().process(&mut buf);
    buf
}

/// Magnitudes of bins 1..=20 of the resampled spectrum, scaled by 1/256.
pub fn spectral_coefficients(spectrum: &[Complex<f64>]) -> [f64; SPECTRAL_COEFFS] {
    let mut out = [0.0; SPECTRAL_COEFFS];
    for (k, o) in out.iter_mut().enumerate() {
        *o = spectrum[k + 1].norm() / SPECTRUM_POINTS as f64;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_cutoff_at_nyquist() {
        assert!(Butterworth::design(4, 51.2, 102.4).is_err());
        assert!(Butterworth::design(4, 60.0, 102.4).is_err());
        assert!(Butterworth::design(0, 5.0, 102.4).is_err());
    }

    #[test]
    fn rejects_short_signal() {
        let f = Butterworth::design(4, 5.0, 102.4).unwrap();
        assert!(f.filtfilt(&[1.0; 11]).is_err());
        assert!(f.filtfilt(&[1.0; 12]).is_ok());
    }

    #[test]
    fn constant_passes_unchanged() {
        let y = butterworth_lowpass(&[5.0; 300], 5.0, 4, 102.4).unwrap();
        for v in y {
            assert!((v - 5.0).abs() < 1e-9);
        }
    }

    #[test]
    fn odd_order_has_unit_dc_gain() {
        let f = Butterworth::design(3, 5.0, 102.4).unwrap();
        let y = f.filter(&[2.0; 100]);
        assert!((y[99] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn resample_keeps_endpoints() {
        let r = resample_linear(&[0.0, 1.0, 4.0], 5);
        assert_eq!(r, vec![0.0, 0.5, 1.0, 2.5, 4.0]);
    }
}
