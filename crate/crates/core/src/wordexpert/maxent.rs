//! L2-regularized multinomial logistic regression over binary features,
//! fitted with limited-memory BFGS.
//!
//! Weights are stored class-major: `w[c * n_features + f]`.

use std::collections::VecDeque;

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    /// Active feature indices per example.
    pub rows: Vec<Vec<u32>>,
    pub labels: Vec<usize>,
    pub n_features: usize,
    pub n_classes: usize,
}

impl Dataset {
    pub fn dim(&self) -> usize {
        self.n_features * self.n_classes
    }
}

/// Class logits for one example.
pub fn logits(w: &[f64], n_features: usize, n_classes: usize, features: &[u32]) -> Vec<f64> {
    (0..n_classes)
        .map(|c| {
            let row = &w[c * n_features..(c + 1) * n_features];
            features.iter().map(|&f| row[f as usize]).sum()
        })
        .collect()
}

/// In-place softmax; returns log of the normalizer.
pub fn softmax(z: &mut [f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
    max + sum.ln()
}

pub fn probabilities(w: &[f64], n_features: usize, n_classes: usize, features: &[u32]) -> Vec<f64> {
    let mut z = logits(w, n_features, n_classes, features);
    softmax(&mut z);
    z
}

/// Regularized negative log-likelihood
/// `sum_i -log p(y_i | x_i) + l2/2 * |w|^2`, writing its gradient to `grad`.
pub fn objective(data: &Dataset, l2: f64, w: &[f64], grad: &mut [f64]) -> f64 {
    let nf = data.n_features;
    let mut loss = 0.0;
    for (g, &wi) in grad.iter_mut().zip(w) {
        *g = l2 * wi;
        loss += 0.5 * l2 * wi * wi;
    }
    for (row, &y) in data.rows.iter().zip(&data.labels) {
        let mut p = logits(w, nf, data.n_classes, row);
        let zy = p[y];
        loss += softmax(&mut p) - zy;
        p[y] -= 1.0;
        for (c, &pc) in p.iter().enumerate() {
            let g = &mut grad[c * nf..(c + 1) * nf];
            for &f in row {
                g[f as usize] += pc;
            }
        }
    }
    loss
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop once `|g| <= tolerance * |g0|`.
    pub tolerance: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            memory: 10,
            max_iterations: 200,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

/// Minimizes a smooth function from `x0`. `f` returns the value at `x` and
/// fills the gradient. Fully deterministic for a deterministic `f`.
pub fn lbfgs<F>(x0: Vec<f64>, mut f: F, opts: &LbfgsOptions) -> Minimum
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let g0 = norm(&g);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = g0 == 0.0;

    while !converged && iterations < opts.max_iterations {
        // two-loop recursion
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &d);
            for (di, yi) in d.iter_mut().zip(y) {
                *di -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = dot(s, y) / dot(y, y);
            d.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &d);
            for (di, si) in d.iter_mut().zip(s) {
                *di += (a - b) * si;
            }
        }
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            history.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }

        let mut step = if history.is_empty() {
            (1.0 / norm(&g)).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            for i in 0..n {
                x_new[i] = x[i] + step * d[i];
            }
            let f_new = f(&x_new, &mut g_new);
            if f_new.is_finite() && f_new <= fx + ARMIJO_C1 * step * slope {
                accepted = Some(f_new);
                break;
            }
            step *= 0.5;
        }
        let Some(f_new) = accepted else {
            break;
        };
        iterations += 1;

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        fx = f_new;
        converged = norm(&g) <= opts.tolerance * g0;
    }

    Minimum {
        grad_norm: norm(&g),
        x,
        value: fx,
        iterations,
        converged,
    }
}

/// Fits weights for `data`, starting from zero.
pub fn fit(data: &Dataset, l2: f64, opts: &LbfgsOptions) -> Minimum {
    lbfgs(
        vec![0.0; data.dim()],
        |w, g| objective(data, l2, w, g),
        opts,
    )
}
