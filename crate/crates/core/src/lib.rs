//! Solvers for Quadratic Unconstrained Binary Optimization.
//!
//! The crate is organised bottom-up:
//!
//! * [`qubo`] holds the problem instance, energy evaluation and the
//!   brute-force / verification oracles.
//! * [`relaxation`] maps unconstrained logits to `(0, 1)` and back to bits.
//! * [`optim`] contains Adam/AdamW, the plateau scheduler, the
//!   moving-average stopping rule and a projected L-BFGS.
//! * [`anneal`] is a single-flip Metropolis annealer.
//! * [`solver`] puts all backends behind one configuration and result type.

pub mod anneal;
pub mod error;
pub mod optim;
pub mod qubo;
pub mod relaxation;
pub mod rng;
pub mod solver;

pub use error::{QfError, Result};
pub use qubo::{BinaryVector, Energy, QuboMatrix};
pub use solver::{solve, solve_repeated, Backend, SolveResult, SolverConfig, StopReason};
