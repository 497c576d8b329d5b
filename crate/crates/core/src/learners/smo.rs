//! Linear support vector machine trained with Platt's sequential minimal
//! optimization on standardized features, with the two-threshold
//! optimality test of Keerthi et al. (modification 1) deciding violators.

use serde::{Deserialize, Serialize};

use super::{sigmoid, Dataset, Prediction, Standardizer};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoParams {
    pub c: f64,
    /// KKT violation tolerance.
    pub tol: f64,
    /// Minimum multiplier change for a step to count as progress.
    pub eps: f64,
    /// Cap on full passes over the training set.
    pub max_passes: usize,
}

impl Default for SmoParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-3,
            eps: 1e-12,
            max_passes: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub standardizer: Standardizer,
    pub weights: Vec<f64>,
    /// Decision value is `w·x - threshold`.
    pub threshold: f64,
}

/// Final optimizer state, for checking optimality conditions.
#[derive(Debug, Clone)]
pub struct SmoState {
    pub alphas: Vec<f64>,
    /// Targets in {-1, +1}.
    pub targets: Vec<f64>,
    /// Decision values on the training rows.
    pub outputs: Vec<f64>,
    pub c: f64,
    pub passes: usize,
}

struct Solver<'a> {
    kernel: Vec<f64>,
    n: usize,
    y: &'a [f64],
    alpha: Vec<f64>,
    b: f64,
    errors: Vec<f64>,
    params: &'a SmoParams,
    /// Index and `F = w·x - y` of the point with the smallest F among those
    /// whose output may still rise, and the largest among those whose
    /// output may still fall.
    up: (usize, f64),
    low: (usize, f64),
}

impl Solver<'_> {
    fn k(&self, i: usize, j: usize) -> f64 {
        self.kernel[i * self.n + j]
    }

    fn output(&self, i: usize) -> f64 {
        (0..self.n)
            .filter(|&j| self.alpha[j] > 0.0)
            .map(|j| self.alpha[j] * self.y[j] * self.k(j, i))
            .sum::<f64>()
            - self.b
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let c = self.params.c;
        let (a1, a2) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (e1, e2) = (self.errors[i1], self.errors[i2]);
        let s = y1 * y2;
        let (lo, hi) = if y1 != y2 {
            ((a2 - a1).max(0.0), (c + a2 - a1).min(c))
        } else {
            ((a1 + a2 - c).max(0.0), (a1 + a2).min(c))
        };
        if lo >= hi {
            return false;
        }
        let (k11, k12, k22) = (self.k(i1, i1), self.k(i1, i2), self.k(i2, i2));
        let eta = k11 + k22 - 2.0 * k12;
        let mut a2_new = if eta > 0.0 {
            (a2 + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // objective is linear along the constraint line; take the better end
            let f1 = y1 * (e1 + self.b) - a1 * k11 - s * a2 * k12;
            let f2 = y2 * (e2 + self.b) - s * a1 * k12 - a2 * k22;
            let l1 = a1 + s * (a2 - lo);
            let h1 = a1 + s * (a2 - hi);
            let obj_lo = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 + 0.5 * lo * lo * k22 + s * lo * l1 * k12;
            let obj_hi = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 + 0.5 * hi * hi * k22 + s * hi * h1 * k12;
            if obj_lo < obj_hi - self.params.eps {
                lo
            } else if obj_lo > obj_hi + self.params.eps {
                hi
            } else {
                a2
            }
        };
        // snap to the box edge exactly so bound multipliers stay at bounds
        if a2_new < 1e-12 * c {
            a2_new = 0.0;
        } else if a2_new > c * (1.0 - 1e-12) {
            a2_new = c;
        }
        // checked after snapping, else a snapped no-op counts as progress
        if (a2_new - a2).abs() < self.params.eps * (a2_new + a2 + self.params.eps) {
            return false;
        }
        let mut a1_new = a1 + s * (a2 - a2_new);
        // keep the equality constraint exact by absorbing drift into a2
        if a1_new < 0.0 {
            a2_new += s * a1_new;
            a1_new = 0.0;
        } else if a1_new > c {
            a2_new += s * (a1_new - c);
            a1_new = c;
        }
        // absorbing can leave round-off just inside an edge
        for a in [&mut a1_new, &mut a2_new] {
            if *a < 1e-12 * c {
                *a = 0.0;
            } else if *a > c * (1.0 - 1e-12) {
                *a = c;
            }
        }

        let b1 = e1 + y1 * (a1_new - a1) * k11 + y2 * (a2_new - a2) * k12 + self.b;
        let b2 = e2 + y1 * (a1_new - a1) * k12 + y2 * (a2_new - a2) * k22 + self.b;
        let b_new = if a1_new > 0.0 && a1_new < c {
            b1
        } else if a2_new > 0.0 && a2_new < c {
            b2
        } else {
            (b1 + b2) / 2.0
        };
        let (d1, d2) = (y1 * (a1_new - a1), y2 * (a2_new - a2));
        let db = b_new - self.b;
        for i in 0..self.n {
            self.errors[i] += d1 * self.k(i1, i) + d2 * self.k(i2, i) - db;
        }
        self.alpha[i1] = a1_new;
        self.alpha[i2] = a2_new;
        self.b = b_new;
        true
    }

    fn refresh_extremes(&mut self) {
        let c = self.params.c;
        let mut up = (usize::MAX, f64::INFINITY);
        let mut low = (usize::MAX, f64::NEG_INFINITY);
        for i in 0..self.n {
            let f = self.errors[i] + self.b;
            let (a, pos) = (self.alpha[i], self.y[i] > 0.0);
            let free = a > 0.0 && a < c;
            if (free || (a <= 0.0) == pos) && f < up.1 {
                up = (i, f);
            }
            if (free || (a <= 0.0) != pos) && f > low.1 {
                low = (i, f);
            }
        }
        self.up = up;
        self.low = low;
    }

    fn optimal(&self) -> bool {
        self.low.1 <= self.up.1 + 2.0 * self.params.tol
    }

    fn step(&mut self, i1: usize, i2: usize) -> bool {
        let moved = self.take_step(i1, i2);
        if moved {
            self.refresh_extremes();
        }
        moved
    }

    fn examine(&mut self, i2: usize) -> bool {
        let c = self.params.c;
        let (a2, pos) = (self.alpha[i2], self.y[i2] > 0.0);
        let f2 = self.errors[i2] + self.b;
        let free = a2 > 0.0 && a2 < c;
        let tol2 = 2.0 * self.params.tol;
        let below = (free || (a2 <= 0.0) == pos) && f2 < self.low.1 - tol2;
        let above = (free || (a2 <= 0.0) != pos) && f2 > self.up.1 + tol2;
        let partner = match (below, above) {
            (false, false) => return false,
            (true, false) => self.low.0,
            (false, true) => self.up.0,
            (true, true) if self.low.1 - f2 > f2 - self.up.1 => self.low.0,
            (true, true) => self.up.0,
        };
        if self.step(partner, i2) {
            return true;
        }
        let e2 = self.errors[i2];
        let non_bound: Vec<usize> = (0..self.n)
            .filter(|&i| self.alpha[i] > 0.0 && self.alpha[i] < c)
            .collect();
        if non_bound.len() > 1 {
            // Platt's second-choice heuristic as a fallback: maximize |E1 - E2|
            let i1 = *non_bound
                .iter()
                .max_by(|&&a, &&b| {
                    (self.errors[a] - e2)
                        .abs()
                        .total_cmp(&(self.errors[b] - e2).abs())
                        .then(b.cmp(&a))
                })
                .unwrap();
            if self.step(i1, i2) {
                return true;
            }
        }
        let start = i2 % self.n.max(1);
        for off in 0..non_bound.len() {
            let i1 = non_bound[(start + off) % non_bound.len()];
            if self.step(i1, i2) {
                return true;
            }
        }
        for off in 0..self.n {
            let i1 = (start + off) % self.n;
            if self.step(i1, i2) {
                return true;
            }
        }
        false
    }
}

impl LinearSvm {
    pub fn fit(dataset: &Dataset, params: &SmoParams) -> Result<Self> {
        Ok(Self::fit_with_state(dataset, params)?.0)
    }

    pub fn fit_with_state(dataset: &Dataset, params: &SmoParams) -> Result<(Self, SmoState)> {
        dataset.check_trainable()?;
        let standardizer = Standardizer::fit(&dataset.rows);
        let rows: Vec<Vec<f64>> = dataset.rows.iter().map(|r| standardizer.apply(r)).collect();
        let n = rows.len();
        let y: Vec<f64> = dataset
            .labels
            .iter()
            .map(|&l| if l { 1.0 } else { -1.0 })
            .collect();
        let mut kernel = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
                kernel[i * n + j] = v;
                kernel[j * n + i] = v;
            }
        }
        let mut s = Solver {
            kernel,
            n,
            y: &y,
            alpha: vec![0.0; n],
            b: 0.0,
            // outputs are all zero initially, so E_i = -y_i
            errors: y.iter().map(|v| -v).collect(),
            params,
            up: (0, 0.0),
            low: (0, 0.0),
        };
        s.refresh_extremes();
        let mut examine_all = true;
        let mut passes = 0;
        while passes < params.max_passes {
            passes += 1;
            let mut changed = 0;
            if examine_all {
                for i in 0..n {
                    changed += s.examine(i) as usize;
                }
            } else {
                for i in 0..n {
                    if s.alpha[i] > 0.0 && s.alpha[i] < params.c {
                        changed += s.examine(i) as usize;
                        if s.optimal() {
                            changed = 0;
                            break;
                        }
                    }
                }
            }
            if examine_all {
                examine_all = false;
                if changed == 0 {
                    break;
                }
            } else if changed == 0 {
                examine_all = true;
            }
        }
        // threshold midway between the two extremes
        let b = 0.5 * (s.up.1 + s.low.1);
        if b.is_finite() {
            for e in &mut s.errors {
                *e += s.b - b;
            }
            s.b = b;
        }

        let d = dataset.n_features();
        let mut weights = vec![0.0; d];
        for i in 0..n {
            if s.alpha[i] > 0.0 {
                for (w, x) in weights.iter_mut().zip(&rows[i]) {
                    *w += s.alpha[i] * y[i] * x;
                }
            }
        }
        let outputs = (0..n).map(|i| s.output(i)).collect();
        let state = SmoState {
            alphas: s.alpha.clone(),
            targets: y.clone(),
            outputs,
            c: params.c,
            passes,
        };
        Ok((
            Self {
                standardizer,
                weights,
                threshold: s.b,
            },
            state,
        ))
    }

    pub fn decision_value(&self, x: &[f64]) -> f64 {
        let z = self.standardizer.apply(x);
        z.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>() - self.threshold
    }

    /// Positive when the decision value is non-negative; the score squashes
    /// the decision value through a logistic.
    pub fn predict(&self, x: &[f64]) -> Prediction {
        Prediction::from_probability(sigmoid(self.decision_value(x)))
    }
}
