//! Projected limited-memory BFGS for box-constrained problems.
//!
//! Search directions come from the usual two-loop recursion. Components
//! that would leave the box from an active bound are zeroed, every trial
//! point is projected onto the box, and steps are accepted by Armijo
//! backtracking measured along the projected displacement.

use std::collections::VecDeque;

use super::clamp_box;
use crate::qubo::dot;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LbfgsParams {
    /// Number of stored curvature pairs.
    pub memory: usize,
    pub lo: f64,
    pub hi: f64,
    /// Relative function-decrease tolerance.
    pub ftol: f64,
    /// Projected-gradient max-norm tolerance.
    pub pgtol: f64,
    pub max_iter: u64,
    pub c1: f64,
    pub backtrack: f64,
    pub max_backtracks: u32,
}

impl LbfgsParams {
    pub fn new(ftol: f64, max_iter: u64) -> Self {
        LbfgsParams {
            memory: 10,
            lo: super::CLAMP_LO,
            hi: super::CLAMP_HI,
            ftol,
            pgtol: 1e-12,
            max_iter,
            c1: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LbfgsStatus {
    /// Relative decrease at or below `ftol`.
    FunctionTolerance,
    /// Projected gradient at or below `pgtol`.
    ProjectedGradient,
    /// No step along steepest descent satisfies the Armijo test.
    LineSearchStalled,
    MaxIter,
    NumericFailure,
}

impl LbfgsStatus {
    pub fn converged(self) -> bool {
        matches!(
            self,
            LbfgsStatus::FunctionTolerance
                | LbfgsStatus::ProjectedGradient
                | LbfgsStatus::LineSearchStalled
        )
    }
}

#[derive(Clone, Debug)]
pub struct LbfgsOutcome {
    /// Last feasible iterate.
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: u64,
    pub status: LbfgsStatus,
    /// Loss after each accepted step, starting with the initial loss.
    pub trace: Vec<f64>,
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

fn two_loop(g: &[f64], memory: &VecDeque<Pair>, d: &mut [f64], alphas: &mut Vec<f64>) {
    d.copy_from_slice(g);
    alphas.clear();
    for p in memory.iter().rev() {
        let a = p.rho * dot(&p.s, d);
        for (di, yi) in d.iter_mut().zip(&p.y) {
            *di -= a * yi;
        }
        alphas.push(a);
    }
    if let Some(last) = memory.back() {
        let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
        for di in d.iter_mut() {
            *di *= gamma;
        }
    }
    for (p, &a) in memory.iter().zip(alphas.iter().rev()) {
        let b = p.rho * dot(&p.y, d);
        for (di, si) in d.iter_mut().zip(&p.s) {
            *di += (a - b) * si;
        }
    }
    for di in d.iter_mut() {
        *di = -*di;
    }
}

/// Zeroes direction components that push through an active bound.
fn mask_active(x: &[f64], d: &mut [f64], lo: f64, hi: f64) {
    for (di, &xi) in d.iter_mut().zip(x) {
        if (xi <= lo && *di < 0.0) || (xi >= hi && *di > 0.0) {
            *di = 0.0;
        }
    }
}

fn projected_grad_norm(x: &[f64], g: &[f64], lo: f64, hi: f64) -> f64 {
    x.iter()
        .zip(g)
        .map(|(&xi, &gi)| ((xi - gi).clamp(lo, hi) - xi).abs())
        .fold(0.0, f64::max)
}

/// Minimizes `objective` over the box `[lo, hi]ⁿ` starting from `x0`
/// (projected onto the box first). `objective(x, grad)` returns the loss
/// and writes the gradient.
pub fn lbfgs_minimize<F>(mut objective: F, x0: &[f64], params: &LbfgsParams) -> LbfgsOutcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let (lo, hi) = (params.lo, params.hi);
    let mut x = x0.to_vec();
    clamp_box(&mut x, lo, hi);
    let mut g = vec![0.0; n];
    let mut f = objective(&x, &mut g);
    let mut trace = vec![f];
    let finish = |x: Vec<f64>, f: f64, iterations: u64, status, trace| LbfgsOutcome {
        x,
        f,
        iterations,
        status,
        trace,
    };
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return finish(x, f, 0, LbfgsStatus::NumericFailure, trace);
    }

    let mut memory: VecDeque<Pair> = VecDeque::with_capacity(params.memory);
    let mut d = vec![0.0; n];
    let mut xt = vec![0.0; n];
    let mut gt = vec![0.0; n];
    let mut alphas = Vec::with_capacity(params.memory);
    let mut iterations = 0u64;

    loop {
        if projected_grad_norm(&x, &g, lo, hi) <= params.pgtol {
            return finish(x, f, iterations, LbfgsStatus::ProjectedGradient, trace);
        }
        if iterations >= params.max_iter {
            return finish(x, f, iterations, LbfgsStatus::MaxIter, trace);
        }

        let mut accepted = None;
        // First try the quasi-Newton direction, then plain steepest descent.
        for use_memory in [true, false] {
            if use_memory && memory.is_empty() {
                continue;
            }
            if use_memory {
                two_loop(&g, &memory, &mut d, &mut alphas);
            } else {
                memory.clear();
                for (di, gi) in d.iter_mut().zip(&g) {
                    *di = -gi;
                }
            }
            mask_active(&x, &mut d, lo, hi);
            if !(dot(&g, &d) < 0.0) {
                continue;
            }
            // Steepest-descent trials start with a unit max-norm displacement.
            let mut alpha = if use_memory {
                1.0
            } else {
                1.0 / d.iter().fold(0.0f64, |m, v| m.max(v.abs()))
            };
            for _ in 0..params.max_backtracks {
                for ((t, &xi), &di) in xt.iter_mut().zip(&x).zip(&d) {
                    *t = (xi + alpha * di).clamp(lo, hi);
                }
                let decrease: f64 = g
                    .iter()
                    .zip(xt.iter().zip(&x))
                    .map(|(gi, (ti, xi))| gi * (ti - xi))
                    .sum();
                if decrease < 0.0 {
                    let ft = objective(&xt, &mut gt);
                    if !ft.is_finite() || gt.iter().any(|v| !v.is_finite()) {
                        return finish(x, f, iterations, LbfgsStatus::NumericFailure, trace);
                    }
                    if ft <= f + params.c1 * decrease {
                        accepted = Some(ft);
                        break;
                    }
                }
                alpha *= params.backtrack;
            }
            if accepted.is_some() {
                break;
            }
        }

        let Some(ft) = accepted else {
            return finish(x, f, iterations, LbfgsStatus::LineSearchStalled, trace);
        };

        let s: Vec<f64> = xt.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            if memory.len() == params.memory {
                memory.pop_front();
            }
            memory.push_back(Pair { s, y, rho: 1.0 / sy });
        } else {
            // The pair is dropped; stale curvature would otherwise keep the
            // steps at the old scale, so restart from steepest descent.
            memory.clear();
        }

        let rel = (f - ft) / f.abs().max(ft.abs()).max(1.0);
        std::mem::swap(&mut x, &mut xt);
        std::mem::swap(&mut g, &mut gt);
        f = ft;
        iterations += 1;
        trace.push(f);
        if rel <= params.ftol {
            return finish(x, f, iterations, LbfgsStatus::FunctionTolerance, trace);
        }
    }
}
