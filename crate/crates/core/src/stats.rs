//! Descriptive statistics shared by the chunk and repetition featurizers.
//!
//! All moments are population moments. Degenerate inputs (zero spread) give
//! zero skewness and kurtosis rather than NaN.

/// Exactly `x[0]` for a constant slice, so deviations vanish exactly.
pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    if x.iter().all(|v| *v == x[0]) {
        return x[0];
    }
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn variance(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

pub fn std_dev(x: &[f64]) -> f64 {
    variance(x).sqrt()
}

/// Central moments (m2, m3, m4) around the mean.
fn central_moments(x: &[f64]) -> (f64, f64, f64) {
    let m = mean(x);
    let n = x.len() as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (m2 / n, m3 / n, m4 / n)
}

/// Relative spread below which a signal counts as constant.
const FLAT_EPS: f64 = 1e-12;

fn is_flat(x: &[f64], m2: f64) -> bool {
    let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    m2.sqrt() <= FLAT_EPS * scale
}

pub fn skewness(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let (m2, m3, _) = central_moments(x);
    if is_flat(x, m2) {
        return 0.0;
    }
    m3 / m2.powf(1.5)
}

/// Non-excess kurtosis (a normal distribution gives 3).
pub fn kurtosis(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let (m2, _, m4) = central_moments(x);
    if is_flat(x, m2) {
        return 0.0;
    }
    m4 / (m2 * m2)
}

/// Quantile by linear interpolation between order statistics: position
/// `p * (n - 1)` in the sorted sample.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted_copy(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// Pearson correlation; 0 when either input is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if is_flat(a, saa / a.len() as f64) || is_flat(b, sbb / b.len() as f64) {
        return 0.0;
    }
    (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)
}
