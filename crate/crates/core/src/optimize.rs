//! Limited-memory quasi-Newton descent with Armijo backtracking.
//!
//! Used by the critical point solver, the numeric embedding constants and the
//! sublevel-set estimators. With `memory == 0` it is plain steepest descent.

use serde::{Deserialize, Serialize};

use crate::numeric::{cdot, norm2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentOptions {
    /// Absolute Euclidean gradient norm at which a run counts as converged.
    pub tol: f64,
    pub max_iter: usize,
    /// Sufficient-decrease constant of the Armijo test.
    pub armijo: f64,
    /// Step shrink factor when the Armijo test fails.
    pub backtrack: f64,
    /// Number of curvature pairs kept for step scaling; 0 disables it.
    pub memory: usize,
    /// Relative floating-point noise allowance in the Armijo test:
    /// a trial value may exceed the target by `noise * (1 + |f|)`.
    pub noise: f64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 10_000, armijo: 1e-4, backtrack: 0.5, memory: 8, noise: 1e-14 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescentStatus {
    Converged,
    MaxIterations,
    LineSearchFailed,
    NonFinite,
}

#[derive(Debug, Clone)]
pub struct DescentOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub status: DescentStatus,
    /// Objective value after every accepted step (starting value first).
    pub trace: Vec<f64>,
}

impl DescentOutcome {
    pub fn converged(&self) -> bool {
        self.status == DescentStatus::Converged
    }
}

/// Minimize `f` (returning value and gradient) from `x0`.
pub fn minimize<F>(mut f: F, x0: Vec<f64>, opts: &DescentOptions) -> DescentOutcome
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut x = x0;
    let (mut fx, mut g) = f(&x);
    let mut trace = vec![fx];
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        let gn = norm2(&g);
        return DescentOutcome { x, value: fx, grad_norm: gn, iterations: 0, status: DescentStatus::NonFinite, trace };
    }
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut gnorm = norm2(&g);
    let mut last_step: Option<(f64, f64)> = None;
    let mut iter = 0;
    let mut status = DescentStatus::MaxIterations;

    while iter < opts.max_iter {
        if gnorm <= opts.tol {
            status = DescentStatus::Converged;
            break;
        }
        let mut d = if opts.memory > 0 && !s_hist.is_empty() {
            two_loop(&g, &s_hist, &y_hist)
        } else {
            g.iter().map(|v| -v).collect()
        };
        let mut slope = cdot(&g, &d);
        if !(slope < 0.0) {
            s_hist.clear();
            y_hist.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
        }
        // steepest steps take the Barzilai-Borwein length when the last step
        // saw positive curvature and double the last length otherwise, so
        // regions of negative curvature are crossed quickly
        let mut alpha = if s_hist.is_empty() {
            let dn = norm2(&d);
            match last_step {
                Some((ss, sy)) if sy > 0.0 => ss / sy,
                Some((ss, _)) => 2.0 * ss.sqrt() / dn,
                None => (1.0 / dn).min(1.0),
            }
        } else {
            1.0
        };
        let noise = opts.noise * (1.0 + fx.abs());
        let mut accepted = None;
        while alpha > 1e-30 {
            let xt: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + alpha * di).collect();
            let (ft, gt) = f(&xt);
            if ft.is_finite() && gt.iter().all(|v| v.is_finite()) && ft <= fx + opts.armijo * alpha * slope + noise {
                accepted = Some((xt, ft, gt));
                break;
            }
            alpha *= opts.backtrack;
        }
        let Some((xn, fnew, gn)) = accepted else {
            if s_hist.is_empty() {
                status = DescentStatus::LineSearchFailed;
                break;
            }
            // retry once from steepest descent with a fresh memory
            s_hist.clear();
            y_hist.clear();
            iter += 1;
            continue;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = cdot(&s, &y);
        last_step = Some((cdot(&s, &s), sy));
        if opts.memory > 0 && sy > 1e-300 && sy.is_finite() {
            s_hist.push(s);
            y_hist.push(y);
            if s_hist.len() > opts.memory {
                s_hist.remove(0);
                y_hist.remove(0);
            }
        }
        x = xn;
        fx = fnew;
        g = gn;
        gnorm = norm2(&g);
        trace.push(fx);
        iter += 1;
    }
    if status == DescentStatus::MaxIterations && gnorm <= opts.tol {
        status = DescentStatus::Converged;
    }
    DescentOutcome { x, value: fx, grad_norm: gnorm, iterations: iter, status, trace }
}

fn two_loop(g: &[f64], s_hist: &[Vec<f64>], y_hist: &[Vec<f64>]) -> Vec<f64> {
    let k = s_hist.len();
    let mut q = g.to_vec();
    let mut alphas = vec![0.0; k];
    let rho: Vec<f64> = (0..k).map(|i| 1.0 / cdot(&y_hist[i], &s_hist[i])).collect();
    for i in (0..k).rev() {
        alphas[i] = rho[i] * cdot(&s_hist[i], &q);
        for (qj, yj) in q.iter_mut().zip(&y_hist[i]) {
            *qj -= alphas[i] * yj;
        }
    }
    let last = k - 1;
    let gamma = cdot(&s_hist[last], &y_hist[last]) / cdot(&y_hist[last], &y_hist[last]);
    for qj in q.iter_mut() {
        *qj *= gamma;
    }
    for i in 0..k {
        let beta = rho[i] * cdot(&y_hist[i], &q);
        for (qj, sj) in q.iter_mut().zip(&s_hist[i]) {
            *qj += (alphas[i] - beta) * sj;
        }
    }
    q.iter().map(|v| -v).collect()
}
