//! Ridge-regularized logistic regression fitted by L-BFGS on standardized
//! features.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{sigmoid, Dataset, Prediction, Standardizer};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticParams {
    pub ridge: f64,
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            ridge: 1e-8,
            max_iter: 200,
            grad_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub standardizer: Standardizer,
    /// Weights on standardized features.
    pub weights: Vec<f64>,
    pub intercept: f64,
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Penalized negative log-likelihood and its gradient. `params` holds the
/// feature weights followed by the intercept; the intercept is not
/// penalized.
pub fn objective(params: &[f64], rows: &[Vec<f64>], labels: &[bool], ridge: f64) -> (f64, Vec<f64>) {
    let d = params.len() - 1;
    let (w, b) = (&params[..d], params[d]);
    let mut f = 0.0;
    let mut g = vec![0.0; d + 1];
    for (x, &y) in rows.iter().zip(labels) {
        let z = b + x.iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
        // -log p(y|x) = softplus(z) - y z
        f += softplus(z) - if y { z } else { 0.0 };
        let r = sigmoid(z) - if y { 1.0 } else { 0.0 };
        for (gj, xj) in g.iter_mut().zip(x) {
            *gj += r * xj;
        }
        g[d] += r;
    }
    for j in 0..d {
        f += ridge * w[j] * w[j];
        g[j] += 2.0 * ridge * w[j];
    }
    (f, g)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Limited-memory BFGS with Armijo backtracking.
fn lbfgs<F>(mut x: Vec<f64>, max_iter: usize, grad_tol: f64, mut eval: F) -> Vec<f64>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    const MEMORY: usize = 10;
    let (mut f, mut g) = eval(&x);
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(MEMORY);
    for _ in 0..max_iter {
        if norm(&g) < grad_tol {
            break;
        }
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        if let Some((s, y, _)) = hist.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        } else {
            let scale = 1.0 / norm(&g).max(1.0);
            q.iter_mut().for_each(|v| *v *= scale);
        }
        for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
            hist.clear();
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let (fc, gc) = eval(&cand);
            if fc <= f + 1e-4 * step * slope {
                accepted = Some((cand, fc, gc));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            if hist.len() == MEMORY {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
        let converged = (f - fn_).abs() <= 1e-15 * f.abs().max(1.0);
        x = xn;
        f = fn_;
        g = gn;
        if converged {
            break;
        }
    }
    x
}

impl LogisticModel {
    pub fn fit(dataset: &Dataset, params: &LogisticParams) -> Result<Self> {
        dataset.check_trainable()?;
        let standardizer = Standardizer::fit(&dataset.rows);
        let rows: Vec<Vec<f64>> = dataset.rows.iter().map(|r| standardizer.apply(r)).collect();
        let d = dataset.n_features();
        let theta = lbfgs(vec![0.0; d + 1], params.max_iter, params.grad_tol, |p| {
            objective(p, &rows, &dataset.labels, params.ridge)
        });
        Ok(Self {
            standardizer,
            weights: theta[..d].to_vec(),
            intercept: theta[d],
        })
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        let z = self.intercept + dot(&self.standardizer.apply(x), &self.weights);
        sigmoid(z)
    }

    pub fn predict(&self, x: &[f64]) -> Prediction {
        Prediction::from_probability(self.probability(x))
    }
}
