//! Optimization machinery shared by the gradient backends.

mod adam;
mod lbfgs;
mod scheduler;
mod stopping;

pub use adam::{AdamParams, AdamState, NonFiniteGradient};
pub use lbfgs::{lbfgs_minimize, LbfgsOutcome, LbfgsParams, LbfgsStatus};
pub use scheduler::{PlateauParams, PlateauScheduler};
pub use stopping::{StopDecision, StopParams, StopState};

/// Box used for all relaxed parameters.
pub const CLAMP_LO: f64 = -5.0;
pub const CLAMP_HI: f64 = 5.0;

/// Elementwise projection onto `[lo, hi]`.
pub fn clamp_box(params: &mut [f64], lo: f64, hi: f64) {
    debug_assert!(lo <= hi);
    for p in params {
        *p = p.clamp(lo, hi);
    }
}
