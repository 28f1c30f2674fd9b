//! Experiment spec files.
//!
//! A spec is a flat TOML document: one `key = value` per line, where a value
//! is an integer, a float, a quoted string or an array of those. Tables are
//! not allowed and unknown keys are rejected.
//!
//! ```toml
//! sizes = [1000]
//! thresholds = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6]   # optional
//! backends = ["sa", "adam", "adamw", "lbfgs"]         # optional
//! repeats = 5                                         # optional
//! instances_per_size = 5                              # optional
//! seed_base = 42
//! output_dir = "runs/n1000"                           # optional, --out-dir wins
//! slope = 1.0                                         # optional solver overrides
//! sweeps = 1000
//! reads = 10
//! max_steps = 1000000
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use qf_core::solver::{DEFAULT_REPEATS, PAPER_THRESHOLDS};
use qf_core::{Backend, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

fn default_thresholds() -> Vec<f64> {
    PAPER_THRESHOLDS.to_vec()
}

fn default_backends() -> Vec<Backend> {
    Backend::ALL.to_vec()
}

fn default_repeats() -> usize {
    DEFAULT_REPEATS
}

fn default_instances() -> usize {
    5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub sizes: Vec<usize>,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    #[serde(default = "default_backends")]
    pub backends: Vec<Backend>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_instances")]
    pub instances_per_size: usize,
    pub seed_base: u64,
    #[serde(default)]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweeps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
}

impl ExperimentSpec {
    /// Spec with every optional field at its default.
    pub fn new(sizes: Vec<usize>, seed_base: u64, output_dir: impl Into<PathBuf>) -> Self {
        ExperimentSpec {
            sizes,
            thresholds: default_thresholds(),
            backends: default_backends(),
            repeats: default_repeats(),
            instances_per_size: default_instances(),
            seed_base,
            output_dir: output_dir.into(),
            slope: None,
            sweeps: None,
            reads: None,
            max_steps: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let spec: ExperimentSpec =
            toml::from_str(text).map_err(|e| BenchError::Config(e.message().to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| BenchError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(BenchError::Config(m));
        if self.sizes.is_empty() || self.thresholds.is_empty() || self.backends.is_empty() {
            return fail("sizes, thresholds and backends must be non-empty".into());
        }
        if self.sizes.contains(&0) {
            return fail("sizes must be positive".into());
        }
        if let Some(t) = self.thresholds.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return fail(format!("threshold {t} is not strictly positive"));
        }
        if self.repeats == 0 || self.instances_per_size == 0 {
            return fail("repeats and instances_per_size must be at least 1".into());
        }
        let unique: BTreeSet<_> = self.backends.iter().collect();
        if unique.len() != self.backends.len() {
            return fail("backends listed more than once".into());
        }
        for b in &self.backends {
            self.solver_config(*b, self.thresholds[0], 0).validate()?;
        }
        Ok(())
    }

    /// Solver settings for one cell, with the spec's overrides applied.
    pub fn solver_config(&self, backend: Backend, threshold: f64, seed: u64) -> SolverConfig {
        let mut cfg = SolverConfig::new(backend)
            .with_threshold(threshold)
            .with_seed(seed);
        if let Some(s) = self.slope {
            cfg.slope = s;
        }
        if let Some(s) = self.sweeps {
            cfg.anneal.schedule.sweeps = s;
        }
        if let Some(r) = self.reads {
            cfg.anneal.reads = r;
        }
        if let Some(m) = self.max_steps {
            cfg.max_steps = m;
        }
        cfg
    }

    /// Total number of solver runs the spec asks for.
    pub fn cell_count(&self) -> usize {
        self.sizes.len()
            * self.instances_per_size
            * self.backends.len()
            * self.thresholds.len()
            * self.repeats
    }
}
