//! L-BFGS minimizer with Armijo backtracking, two-loop recursion form.
//!
//! The objective may refuse a point (returning `None`, e.g. when a
//! factorization fails); the line search treats that as a too-long step and
//! backtracks. Accepted steps therefore always decrease the objective.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::linalg::dot;
use crate::scalar;

#[derive(Debug, Clone)]
pub struct LbfgsOpts {
    pub max_iters: usize,
    /// Convergence on the gradient infinity norm.
    pub tol_grad: f64,
    /// Convergence on the relative objective decrease.
    pub tol_obj: f64,
    pub memory: usize,
}

impl Default for LbfgsOpts {
    fn default() -> Self {
        LbfgsOpts { max_iters: 150, tol_grad: 1e-5, tol_obj: 1e-9, memory: 8 }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;

/// Minimize `eval`, starting from `x0`. Returns `None` only when the very
/// first evaluation fails; afterwards the best accepted point is always
/// reported.
pub fn minimize<F>(mut eval: F, x0: &[f64], opts: &LbfgsOpts) -> Option<LbfgsOutcome>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let mut x = x0.to_vec();
    let (mut fx, mut grad) = eval(&x)?;
    if !fx.is_finite() {
        return None;
    }

    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    let mut converged = inf_norm(&grad) < opts.tol_grad;

    while !converged && iterations < opts.max_iters {
        let mut dir = two_loop(&grad, &history);
        for d in &mut dir {
            *d = -*d;
        }
        let mut slope = dot(&grad, &dir);
        if !(slope < 0.0) {
            // Not a descent direction; fall back to steepest descent.
            history.clear();
            for (d, g) in dir.iter_mut().zip(&grad) {
                *d = -*g;
            }
            slope = dot(&grad, &dir);
            if !(slope < 0.0) {
                break; // zero gradient
            }
        }

        // First iteration: scale the steepest-descent step to unit length.
        let mut step = if history.is_empty() {
            let n = inf_norm(&dir);
            if n > 1.0 {
                1.0 / n
            } else {
                1.0
            }
        } else {
            1.0
        };

        let mut accepted: Option<(Vec<f64>, f64, Vec<f64>)> = None;
        for _ in 0..MAX_BACKTRACKS {
            let candidate: Vec<f64> =
                x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            if let Some((fc, gc)) = eval(&candidate) {
                if fc.is_finite() && fc <= fx + ARMIJO_C1 * step * slope {
                    accepted = Some((candidate, fc, gc));
                    break;
                }
            }
            step *= 0.5;
        }

        let Some((x_new, f_new, g_new)) = accepted else {
            break; // line search stalled; keep the best point found so far
        };
        iterations += 1;

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm2(&s) * norm2(&y) {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }

        let obj_drop = fx - f_new;
        x = x_new;
        fx = f_new;
        grad = g_new;

        if inf_norm(&grad) < opts.tol_grad || obj_drop <= opts.tol_obj * (1.0 + scalar::abs(fx)) {
            converged = true;
        }
    }

    Some(LbfgsOutcome { x, value: fx, iterations, converged })
}

/// H·g with the implicit inverse-Hessian from the (s, y, rho) history.
fn two_loop(grad: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut coeffs = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        coeffs.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in &mut q {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in history.iter().zip(coeffs.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, &x| m.max(scalar::abs(x)))
}

fn norm2(v: &[f64]) -> f64 {
    scalar::sqrt(dot(v, v))
}
