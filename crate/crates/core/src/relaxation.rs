//! Sigmoid relaxation of the binary objective.
//!
//! Logits `x` are projected with `x′ = σ(s·(x − 0.5))`, the relaxed loss is
//! `x′ᵀ Q x′`, and a final hard threshold `x″ = [x′ ≥ 0.5]` recovers bits.

use crate::error::{QfError, Result};
use crate::qubo::{dot, BinaryVector, Energy, QuboMatrix};

/// Default projection slope.
pub const DEFAULT_SLOPE: f64 = 1.0;

/// Unconstrained logits plus the projection slope.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuousVector {
    pub params: Vec<f64>,
    slope: f64,
}

impl ContinuousVector {
    pub fn new(params: Vec<f64>, slope: f64) -> Result<Self> {
        if !(slope > 0.0 && slope.is_finite()) {
            return Err(QfError::validation(format!("slope must be positive, got {slope}")));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(QfError::validation("parameters must be finite"));
        }
        Ok(ContinuousVector { params, slope })
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }
}

/// Largest double below 0.5.
const BELOW_HALF: f64 = 0.5 - f64::EPSILON / 4.0;

/// Logistic function, branching on sign so `exp` never overflows.
///
/// Negative arguments always map strictly below 0.5, so thresholding the
/// output at 0.5 agrees with the sign of `z` even when `|z|` is tiny.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        (e / (1.0 + e)).min(BELOW_HALF)
    }
}

#[inline]
fn project_one(x: f64, slope: f64) -> f64 {
    sigmoid(slope * (x - 0.5))
}

pub fn sigmoid_project(x: &ContinuousVector) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    project_into(&x.params, x.slope, &mut out);
    out
}

pub fn project_into(params: &[f64], slope: f64, out: &mut [f64]) {
    for (o, &p) in out.iter_mut().zip(params) {
        *o = project_one(p, slope);
    }
}

/// Heaviside threshold with `u(0) = 1`.
pub fn binarize(xp: &[f64]) -> BinaryVector {
    BinaryVector::new(xp.iter().map(|&v| u8::from(v >= 0.5)).collect())
        .expect("threshold output is binary")
}

/// Relaxed loss `x′ᵀQx′` and its gradient with respect to the logits,
/// `∂L/∂xᵢ = 2 (Qx′)ᵢ · x′ᵢ(1 − x′ᵢ) · s`.
pub fn relaxed_loss_and_grad(q: &QuboMatrix, x: &ContinuousVector) -> Result<(Energy, Vec<f64>)> {
    q.check_len(x.len())?;
    let mut obj = RelaxedObjective::new(q, x.slope());
    let mut grad = vec![0.0; x.len()];
    let loss = obj.eval(&x.params, &mut grad);
    Ok((Energy(loss), grad))
}

/// Reusable evaluator for the relaxed loss; keeps scratch buffers so the
/// optimizer loops do not allocate per step.
pub struct RelaxedObjective<'a> {
    q: &'a QuboMatrix,
    slope: f64,
    proj: Vec<f64>,
    qx: Vec<f64>,
}

impl<'a> RelaxedObjective<'a> {
    pub fn new(q: &'a QuboMatrix, slope: f64) -> Self {
        let n = q.n();
        RelaxedObjective {
            q,
            slope,
            proj: vec![0.0; n],
            qx: vec![0.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.q.n()
    }

    /// Writes the gradient into `grad` and returns the loss.
    pub fn eval(&mut self, params: &[f64], grad: &mut [f64]) -> f64 {
        project_into(params, self.slope, &mut self.proj);
        self.q.mul_vec_into(&self.proj, &mut self.qx);
        let loss = dot(&self.proj, &self.qx);
        let two_s = 2.0 * self.slope;
        for ((g, &p), &y) in grad.iter_mut().zip(&self.proj).zip(&self.qx) {
            *g = two_s * y * p * (1.0 - p);
        }
        loss
    }

    pub fn loss(&mut self, params: &[f64]) -> f64 {
        project_into(params, self.slope, &mut self.proj);
        self.q.mul_vec_into(&self.proj, &mut self.qx);
        dot(&self.proj, &self.qx)
    }
}
