//! One configuration and one result type across all backends.
//!
//! Gradient backends (`adam`, `adamw`, `lbfgs`) start from i.i.d. standard
//! normal logits drawn from stream `(seed, GradientInit, 0)`, clamp them to
//! the box, optimize the relaxed loss, and finally threshold the projected
//! vector to bits. The annealing backend works on bits directly. Every
//! result carries the energy recomputed from its bits.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::anneal::{anneal, AnnealConfig, AnnealSchedule};
use crate::error::{QfError, Result};
use crate::optim::{
    clamp_box, lbfgs_minimize, AdamParams, AdamState, LbfgsParams, LbfgsStatus, PlateauParams,
    PlateauScheduler, StopDecision, StopParams, StopState, CLAMP_HI, CLAMP_LO,
};
use crate::qubo::{energy_binary, BinaryVector, Energy, QuboMatrix};
use crate::relaxation::{binarize, project_into, RelaxedObjective, DEFAULT_SLOPE};
use crate::rng::{self, Domain};

pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;

/// Sweep thresholds, loosest first.
pub const PAPER_THRESHOLDS: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

pub const DEFAULT_REPEATS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Sa,
    Adam,
    Adamw,
    Lbfgs,
}

impl Backend {
    pub const ALL: [Backend; 4] = [Backend::Sa, Backend::Adam, Backend::Adamw, Backend::Lbfgs];

    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Sa => "sa",
            Backend::Adam => "adam",
            Backend::Adamw => "adamw",
            Backend::Lbfgs => "lbfgs",
        }
    }

    pub fn is_gradient(self) -> bool {
        !matches!(self, Backend::Sa)
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Backend {
    type Err = QfError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sa" => Ok(Backend::Sa),
            "adam" => Ok(Backend::Adam),
            "adamw" => Ok(Backend::Adamw),
            "lbfgs" => Ok(Backend::Lbfgs),
            other => Err(QfError::validation(format!(
                "unknown backend {other:?} (expected sa, adam, adamw or lbfgs)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    #[serde(rename = "converged")]
    Converged,
    #[serde(rename = "max_steps")]
    MaxSteps,
    #[serde(rename = "numeric-failure")]
    NumericFailure,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::MaxSteps => "max_steps",
            StopReason::NumericFailure => "numeric-failure",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealParams {
    pub schedule: AnnealSchedule,
    pub reads: usize,
}

impl Default for AnnealParams {
    fn default() -> Self {
        AnnealParams {
            schedule: AnnealSchedule::default(),
            reads: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub window: usize,
    pub patience: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            window: 100,
            patience: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub backend: Backend,
    /// Convergence threshold: moving-average relative change for Adam
    /// paths, relative function decrease for L-BFGS. Unused by annealing.
    pub threshold: f64,
    pub max_steps: u64,
    pub seed: u64,
    pub slope: f64,
    pub clamp_lo: f64,
    pub clamp_hi: f64,
    pub anneal: AnnealParams,
    pub adam: AdamParams,
    /// Plateau learning-rate schedule; `None` keeps the rate fixed.
    pub scheduler: Option<PlateauParams>,
    pub stop: StopRule,
    pub lbfgs_memory: usize,
}

impl SolverConfig {
    /// Defaults for `backend`. `adam` runs with the plateau scheduler and no
    /// weight decay; `adamw` with decay 1e-5 and a fixed rate.
    pub fn new(backend: Backend) -> Self {
        let (adam, scheduler) = match backend {
            Backend::Adam => (AdamParams::adam(), Some(PlateauParams::default())),
            Backend::Adamw => (AdamParams::adamw(), None),
            Backend::Sa | Backend::Lbfgs => (AdamParams::adam(), None),
        };
        SolverConfig {
            backend,
            threshold: 1e-6,
            max_steps: DEFAULT_MAX_STEPS,
            seed: 0,
            slope: DEFAULT_SLOPE,
            clamp_lo: CLAMP_LO,
            clamp_hi: CLAMP_HI,
            anneal: AnnealParams::default(),
            adam,
            scheduler,
            stop: StopRule::default(),
            lbfgs_memory: 10,
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(QfError::validation(m));
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return fail("threshold must be positive and finite");
        }
        if self.max_steps == 0 {
            return fail("max_steps must be at least 1");
        }
        if !(self.slope > 0.0 && self.slope.is_finite()) {
            return fail("slope must be positive and finite");
        }
        if !(self.clamp_lo < self.clamp_hi) {
            return fail("clamp bounds must satisfy lo < hi");
        }
        if self.anneal.reads == 0 {
            return fail("reads must be at least 1");
        }
        self.anneal.schedule.validate()?;
        let a = &self.adam;
        if !(a.lr > 0.0 && (0.0..1.0).contains(&a.beta1) && (0.0..1.0).contains(&a.beta2)) {
            return fail("adam needs lr > 0 and betas in [0, 1)");
        }
        if !(a.eps > 0.0 && a.weight_decay >= 0.0) {
            return fail("adam needs eps > 0 and weight_decay >= 0");
        }
        if let Some(p) = &self.scheduler {
            if !(p.factor > 0.0 && p.factor < 1.0 && p.patience >= 1 && p.min_lr > 0.0) {
                return fail("scheduler needs factor in (0, 1), patience >= 1, min_lr > 0");
            }
        }
        if self.stop.window == 0 || self.stop.patience == 0 {
            return fail("stop window and patience must be at least 1");
        }
        if self.lbfgs_memory == 0 {
            return fail("lbfgs memory must be at least 1");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub bits: BinaryVector,
    pub energy: Energy,
    /// Optimizer steps (Adam), outer iterations (L-BFGS) or reads × sweeps (SA).
    pub steps: u64,
    pub wall_time_s: f64,
    pub stop_reason: StopReason,
    pub backend: Backend,
    pub seed: u64,
    pub threshold: f64,
}

/// One-line JSON view of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultSummary {
    pub backend: Backend,
    pub n: usize,
    pub threshold: f64,
    pub seed: u64,
    pub energy: f64,
    pub steps: u64,
    pub wall_time_s: f64,
    pub stop_reason: StopReason,
}

impl SolveResult {
    pub fn summary(&self) -> ResultSummary {
        ResultSummary {
            backend: self.backend,
            n: self.bits.len(),
            threshold: self.threshold,
            seed: self.seed,
            energy: self.energy.value(),
            steps: self.steps,
            wall_time_s: self.wall_time_s,
            stop_reason: self.stop_reason,
        }
    }
}

fn initial_logits(n: usize, seed: u64, lo: f64, hi: f64) -> Vec<f64> {
    let mut rng = rng::stream(seed, Domain::GradientInit, 0);
    let mut x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    clamp_box(&mut x, lo, hi);
    x
}

fn finish_relaxed(
    q: &QuboMatrix,
    cfg: &SolverConfig,
    params: &[f64],
    steps: u64,
    stop_reason: StopReason,
    start: Instant,
) -> Result<SolveResult> {
    let mut proj = vec![0.0; params.len()];
    project_into(params, cfg.slope, &mut proj);
    let bits = binarize(&proj);
    let energy = energy_binary(q, &bits)?;
    Ok(SolveResult {
        bits,
        energy,
        steps,
        wall_time_s: start.elapsed().as_secs_f64(),
        stop_reason,
        backend: cfg.backend,
        seed: cfg.seed,
        threshold: cfg.threshold,
    })
}

fn solve_adam(q: &QuboMatrix, cfg: &SolverConfig, start: Instant) -> Result<SolveResult> {
    let n = q.n();
    let mut params = initial_logits(n, cfg.seed, cfg.clamp_lo, cfg.clamp_hi);
    let mut obj = RelaxedObjective::new(q, cfg.slope);
    let mut grad = vec![0.0; n];
    let mut adam = AdamState::new(n, cfg.adam);
    let mut sched = cfg.scheduler.map(PlateauScheduler::new);
    let mut stop = StopState::new(StopParams {
        window: cfg.stop.window,
        patience: cfg.stop.patience,
        threshold: cfg.threshold,
        max_steps: cfg.max_steps,
    });
    let mut step = 0u64;
    let reason = loop {
        let loss = obj.eval(&params, &mut grad);
        if !loss.is_finite() {
            break StopReason::NumericFailure;
        }
        if adam.step(&mut params, &grad, cfg.clamp_lo, cfg.clamp_hi).is_err() {
            break StopReason::NumericFailure;
        }
        if let Some(s) = sched.as_mut() {
            adam.lr = s.observe(loss, adam.lr);
        }
        let decision = stop.observe(loss, step);
        step += 1;
        match decision {
            StopDecision::Continue => {}
            StopDecision::Converged => break StopReason::Converged,
            StopDecision::MaxSteps => break StopReason::MaxSteps,
            StopDecision::NumericFailure => break StopReason::NumericFailure,
        }
    };
    finish_relaxed(q, cfg, &params, step, reason, start)
}

fn solve_lbfgs(q: &QuboMatrix, cfg: &SolverConfig, start: Instant) -> Result<SolveResult> {
    let x0 = initial_logits(q.n(), cfg.seed, cfg.clamp_lo, cfg.clamp_hi);
    let mut obj = RelaxedObjective::new(q, cfg.slope);
    let params = LbfgsParams {
        memory: cfg.lbfgs_memory,
        lo: cfg.clamp_lo,
        hi: cfg.clamp_hi,
        ..LbfgsParams::new(cfg.threshold, cfg.max_steps)
    };
    let out = lbfgs_minimize(|x, g| obj.eval(x, g), &x0, &params);
    let reason = match out.status {
        LbfgsStatus::MaxIter => StopReason::MaxSteps,
        LbfgsStatus::NumericFailure => StopReason::NumericFailure,
        _ => StopReason::Converged,
    };
    finish_relaxed(q, cfg, &out.x, out.iterations, reason, start)
}

fn solve_sa(q: &QuboMatrix, cfg: &SolverConfig, start: Instant) -> Result<SolveResult> {
    let out = anneal(
        q,
        &AnnealConfig {
            schedule: cfg.anneal.schedule,
            reads: cfg.anneal.reads,
            seed: cfg.seed,
        },
    )?;
    Ok(SolveResult {
        bits: out.bits,
        energy: out.energy,
        steps: out.total_sweeps,
        wall_time_s: start.elapsed().as_secs_f64(),
        stop_reason: StopReason::Converged,
        backend: Backend::Sa,
        seed: cfg.seed,
        threshold: cfg.threshold,
    })
}

/// Runs one backend on `q`.
pub fn solve(q: &QuboMatrix, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let start = Instant::now();
    match cfg.backend {
        Backend::Sa => solve_sa(q, cfg, start),
        Backend::Adam | Backend::Adamw => solve_adam(q, cfg, start),
        Backend::Lbfgs => solve_lbfgs(q, cfg, start),
    }
}

#[derive(Clone, Debug)]
pub struct RepeatedOutcome {
    pub runs: Vec<SolveResult>,
    /// Index of the lowest-energy run (ties go to the lower index).
    pub best: usize,
}

impl RepeatedOutcome {
    pub fn best(&self) -> &SolveResult {
        &self.runs[self.best]
    }
}

/// Runs `repeats` solves with seeds `cfg.seed + k` (wrapping).
pub fn solve_repeated(q: &QuboMatrix, cfg: &SolverConfig, repeats: usize) -> Result<RepeatedOutcome> {
    if repeats == 0 {
        return Err(QfError::validation("repeats must be at least 1"));
    }
    let runs = (0..repeats as u64)
        .map(|k| solve(q, &cfg.clone().with_seed(cfg.seed.wrapping_add(k))))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (k, r) in runs.iter().enumerate() {
        if r.energy.value() < runs[best].energy.value() {
            best = k;
        }
    }
    Ok(RepeatedOutcome { runs, best })
}
