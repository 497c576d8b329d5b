//! Lloyd's k-means on scalar data with k-means++ seeding.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    /// Sorted ascending.
    pub centroids: Vec<f64>,
    /// Within-cluster sum of squares of the returned solution.
    pub wcss: f64,
    /// Objective after every Lloyd iteration of the returned run.
    pub history: Vec<f64>,
}

fn distinct_count(sorted: &[f64]) -> usize {
    if sorted.is_empty() {
        return 0;
    }
    1 + sorted.windows(2).filter(|w| w[1] > w[0]).count()
}

/// Prefix sums of centered points and their squares, giving any block's
/// mean and scatter in constant time.
struct Prefix<'a> {
    points: &'a [f64],
    shift: f64,
    s1: Vec<f64>,
    s2: Vec<f64>,
}

impl<'a> Prefix<'a> {
    fn new(points: &'a [f64]) -> Self {
        let shift = points[points.len() / 2];
        let mut s1 = Vec::with_capacity(points.len() + 1);
        let mut s2 = Vec::with_capacity(points.len() + 1);
        let (mut a, mut b) = (0.0, 0.0);
        s1.push(0.0);
        s2.push(0.0);
        for p in points {
            let d = p - shift;
            a += d;
            b += d * d;
            s1.push(a);
            s2.push(b);
        }
        Self {
            points,
            shift,
            s1,
            s2,
        }
    }

    fn mean(&self, a: usize, b: usize) -> f64 {
        self.shift + (self.s1[b] - self.s1[a]) / (b - a) as f64
    }

    /// Σ (p - c)² over points `a..b`.
    fn cost(&self, a: usize, b: usize, c: f64) -> f64 {
        if a >= b {
            return 0.0;
        }
        let c = c - self.shift;
        let v = (self.s2[b] - self.s2[a]) - 2.0 * c * (self.s1[b] - self.s1[a])
            + c * c * (b - a) as f64;
        v.max(0.0)
    }

    /// Index of the first point above `x`, searching from `from`.
    fn after(&self, from: usize, x: f64) -> usize {
        from + self.points[from..].partition_point(|p| *p <= x)
    }
}

/// Point ranges nearest to each sorted centroid: `starts[c]..starts[c + 1]`
/// (ties go to the lower centroid).
fn assign(pre: &Prefix, centroids: &[f64]) -> Vec<usize> {
    let mut starts = Vec::with_capacity(centroids.len() + 1);
    let mut i = 0;
    starts.push(0);
    for w in centroids.windows(2) {
        i = pre.after(i, (w[0] + w[1]) / 2.0);
        starts.push(i);
    }
    starts.push(pre.points.len());
    starts
}

fn objective(pre: &Prefix, centroids: &[f64], starts: &[usize]) -> f64 {
    centroids
        .iter()
        .enumerate()
        .map(|(c, &m)| pre.cost(starts[c], starts[c + 1], m))
        .sum()
}

/// k-means++: each new centroid is a point drawn with probability
/// proportional to its squared distance from the nearest chosen centroid.
fn seed_plus_plus<R: Rng>(pre: &Prefix, k: usize, rng: &mut R) -> Vec<f64> {
    let points = pre.points;
    let n = points.len();
    let mut centroids = vec![points[rng.random_range(0..n)]];
    while centroids.len() < k {
        let starts = assign(pre, &centroids);
        let costs: Vec<f64> = (0..centroids.len())
            .map(|c| pre.cost(starts[c], starts[c + 1], centroids[c]))
            .collect();
        let total: f64 = costs.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut r = rng.random::<f64>() * total;
        let mut region = costs.len() - 1;
        for (c, &v) in costs.iter().enumerate() {
            if r < v {
                region = c;
                break;
            }
            r -= v;
        }
        let (a, b, c) = (starts[region], starts[region + 1], centroids[region]);
        // first index j in a..b whose running cost from a exceeds r
        let (mut lo, mut hi) = (a, b - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if pre.cost(a, mid + 1, c) > r {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let mut pick = points[lo];
        if pick == c {
            // rounding landed on the centroid itself; take the farther end
            pick = if (points[a] - c).abs() >= (points[b - 1] - c).abs() {
                points[a]
            } else {
                points[b - 1]
            };
        }
        let at = centroids.partition_point(|x| *x < pick);
        centroids.insert(at, pick);
    }
    centroids
}

fn lloyd(pre: &Prefix, mut centroids: Vec<f64>, max_iter: usize) -> KMeansFit {
    let mut starts = assign(pre, &centroids);
    let mut history = Vec::new();
    for _ in 0..max_iter.max(1) {
        for c in 0..centroids.len() {
            if starts[c + 1] > starts[c] {
                centroids[c] = pre.mean(starts[c], starts[c + 1]);
            }
        }
        centroids.sort_by(f64::total_cmp);
        history.push(objective(pre, &centroids, &starts));
        let next = assign(pre, &centroids);
        if next == starts {
            break;
        }
        starts = next;
    }
    KMeansFit {
        wcss: *history.last().unwrap(),
        centroids,
        history,
    }
}

/// Best of `restarts` k-means++ seeded runs on `points` (sorted ascending).
pub fn kmeans_1d<R: Rng>(
    points: &[f64],
    k: usize,
    restarts: usize,
    max_iter: usize,
    rng: &mut R,
) -> Result<KMeansFit> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    debug_assert!(points.windows(2).all(|w| w[0] <= w[1]));
    let distinct = distinct_count(points);
    if distinct < k {
        return Err(Error::InsufficientCandidates {
            needed: k,
            got: distinct,
        });
    }
    let pre = Prefix::new(points);
    let mut best: Option<KMeansFit> = None;
    for _ in 0..restarts.max(1) {
        let fit = lloyd(&pre, seed_plus_plus(&pre, k, rng), max_iter);
        if best.as_ref().is_none_or(|b| fit.wcss < b.wcss) {
            best = Some(fit);
        }
    }
    Ok(best.unwrap())
}

/// How [`elbow`] scores the step from k-1 to k clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElbowRule {
    /// Relative drop `(W(k-1) - W(k)) / W(k-1)`.
    RelativeDrop,
    /// Relative drop divided by the drop evenly spread points would give,
    /// `1 - ((k-1)/k)²`. Clusters of very unequal width no longer hide
    /// behind the large early drops of any spread-out sample.
    #[default]
    UniformAdjusted,
}

impl ElbowRule {
    fn score(self, k: usize, prev: f64, cur: f64) -> f64 {
        if !(prev > 0.0) {
            return 0.0;
        }
        let drop = (prev - cur) / prev;
        match self {
            ElbowRule::RelativeDrop => drop,
            ElbowRule::UniformAdjusted => {
                let r = (k - 1) as f64 / k as f64;
                drop / (1.0 - r * r)
            }
        }
    }
}

/// Picks k in `[k_min, k_max]` at the best-scoring step over steps that
/// stay inside the range (the drop out of a single cluster only counts
/// when `k_min` is 1). Ties pick the smaller k; with no positive score,
/// `k_min` wins. Returns the chosen fit.
pub fn elbow<R: Rng>(
    points: &[f64],
    k_min: usize,
    k_max: usize,
    restarts: usize,
    max_iter: usize,
    rule: ElbowRule,
    rng: &mut R,
) -> Result<KMeansFit> {
    let distinct = distinct_count(points);
    let k_min = k_min.max(1);
    if distinct < k_min {
        return Err(Error::InsufficientCandidates {
            needed: k_min,
            got: distinct,
        });
    }
    let k_max = k_max.min(distinct).max(k_min);
    let mut fits: Vec<KMeansFit> = Vec::with_capacity(k_max - k_min + 1);
    for k in k_min..=k_max {
        fits.push(kmeans_1d(points, k, restarts, max_iter, rng)?);
    }
    let at = |k: usize| &fits[k - k_min];
    let mut chosen = k_min;
    let mut best = 0.0;
    for k in (k_min + 1)..=k_max {
        let score = rule.score(k, at(k - 1).wcss, at(k).wcss);
        if score > best {
            best = score;
            chosen = k;
        }
    }
    Ok(fits.swap_remove(chosen - k_min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn separated_groups() {
        let mut pts: Vec<f64> = (10..=20).map(f64::from).collect();
        pts.extend((500..=510).map(f64::from));
        let fit = kmeans_1d(&pts, 2, 3, 100, &mut rng()).unwrap();
        assert_eq!(fit.centroids, vec![15.0, 505.0]);
    }

    #[test]
    fn single_group_mean() {
        let pts = [3.0, 4.0, 8.0, 9.0];
        let fit = kmeans_1d(&pts, 1, 1, 100, &mut rng()).unwrap();
        assert_eq!(fit.centroids, vec![6.0]);
        assert_eq!(fit.wcss, 9.0 + 4.0 + 4.0 + 9.0);
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            kmeans_1d(&[1.0, 1.0, 2.0], 3, 1, 100, &mut rng()),
            Err(Error::InsufficientCandidates { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn elbow_finds_natural_cluster_count() {
        let mut pts = Vec::new();
        for g in 0..6 {
            pts.extend((0..40).map(|i| (g * 400 + i) as f64));
        }
        for rule in [ElbowRule::RelativeDrop, ElbowRule::UniformAdjusted] {
            let fit = elbow(&pts, 2, 20, 5, 100, rule, &mut rng()).unwrap();
            assert_eq!(fit.centroids.len(), 6);
        }
    }

    #[test]
    fn uneven_widths_need_the_adjusted_rule() {
        // wide and narrow quiet blocks separated by equal gaps
        let mut pts = Vec::new();
        for (g, w) in [500, 60, 420, 80, 510, 60, 300, 450, 90, 480, 200].iter().enumerate() {
            pts.extend((0..*w).map(|i| (g * 900 + i) as f64));
        }
        let fit = elbow(&pts, 2, 30, 10, 100, ElbowRule::UniformAdjusted, &mut rng()).unwrap();
        assert!(fit.centroids.len() >= 11, "{}", fit.centroids.len());
    }

    #[test]
    fn objective_never_increases() {
        let mut r = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let mut pts: Vec<f64> = (0..300).map(|_| r.random_range(0.0..1000.0f64).floor()).collect();
            pts.sort_by(f64::total_cmp);
            let k = r.random_range(1..12);
            let fit = kmeans_1d(&pts, k, 1, 100, &mut r).unwrap();
            for w in fit.history.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-9), "{:?}", fit.history);
            }
        }
    }
}
