//! Sweep runner.
//!
//! Layout of an output directory:
//!
//! ```text
//! manifest.json                  spec, tool version, instance seeds
//! matrices/<instance>.qbin
//! solutions/<instance>_<backend>_t<threshold>_s<seed>.json
//! records.csv                    one row per completed run
//! failures.csv                   runs that returned an error
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use qf_core::rng::{self, Domain};
use qf_core::qubo::{generate_qubo, SolutionFile};
use qf_core::{solve, Backend, QuboMatrix, StopReason};
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentSpec;
use crate::error::{BenchError, Result};

pub const RECORDS_FILE: &str = "records.csv";
pub const FAILURES_FILE: &str = "failures.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Environment variable that overrides the worker count.
pub const THREADS_ENV: &str = "QF_THREADS";

/// Instance entries are drawn from `[INSTANCE_LO, INSTANCE_HI)`.
pub const INSTANCE_LO: f64 = -5.0;
pub const INSTANCE_HI: f64 = 5.0;

/// One completed run. Field order is the CSV column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub instance_id: String,
    pub backend: Backend,
    pub n: usize,
    pub threshold: f64,
    pub seed: u64,
    pub energy: f64,
    pub steps: u64,
    pub wall_time_s: f64,
    pub stop_reason: StopReason,
}

impl BenchRecord {
    pub fn solution_file_name(&self) -> String {
        solution_file_name(&self.instance_id, self.backend, self.threshold, self.seed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub instance_id: String,
    pub backend: Backend,
    pub n: usize,
    pub threshold: f64,
    pub seed: u64,
    pub error: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceInfo {
    pub instance_id: String,
    pub n: usize,
    pub seed: u64,
    pub matrix: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    spec: &'a ExperimentSpec,
    instance_range: [f64; 2],
    instances: &'a [InstanceInfo],
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub output_dir: PathBuf,
    pub instances: Vec<InstanceInfo>,
    pub records: Vec<BenchRecord>,
    pub failures: Vec<RunFailure>,
}

pub fn instance_id(n: usize, k: usize) -> String {
    format!("n{n}_i{k}")
}

/// Seed of instance `k` at size `n`: draw `k` of the instance stream
/// `(seed_base, n)`.
pub fn instance_seed(seed_base: u64, n: usize, k: usize) -> u64 {
    let mut rng = rng::stream(seed_base, Domain::Instance, n as u64);
    let mut s = 0;
    for _ in 0..=k {
        s = rng.next_u64();
    }
    s
}

pub fn solution_file_name(instance_id: &str, backend: Backend, threshold: f64, seed: u64) -> String {
    format!("{instance_id}_{backend}_t{threshold:e}_s{seed}.json")
}

/// Worker count: `QF_THREADS` if set, else `requested`, else the number of
/// available cores.
pub fn resolve_threads(requested: Option<usize>) -> Result<usize> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        return match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(t),
            _ => Err(BenchError::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        };
    }
    match requested {
        Some(0) => Err(BenchError::Config("threads must be at least 1".into())),
        Some(t) => Ok(t),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn output_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Output {
        path: path.display().to_string(),
        source,
    }
}

struct Cell {
    inst: usize,
    backend: Backend,
    threshold: f64,
    repeat: usize,
}

enum CellResult {
    Done(BenchRecord),
    Failed(RunFailure),
}

/// Runs every (instance, backend, threshold, repeat) cell of `spec` on a
/// pool of `threads` workers and writes the output directory.
///
/// The directory tree and manifest are written before any solve, so an
/// unwritable destination fails fast. Repeat `r` of an instance uses solver
/// seed `instance_seed + r` for every backend and threshold. Records come
/// out in cell order regardless of scheduling.
pub fn run_experiment(spec: &ExperimentSpec, threads: usize) -> Result<ExperimentOutcome> {
    spec.validate()?;
    let out = spec.output_dir.clone();
    let matrices_dir = out.join("matrices");
    let solutions_dir = out.join("solutions");
    for d in [&out, &matrices_dir, &solutions_dir] {
        fs::create_dir_all(d).map_err(output_err(d))?;
    }

    let mut instances = Vec::new();
    for &n in &spec.sizes {
        for k in 0..spec.instances_per_size {
            let id = instance_id(n, k);
            instances.push(InstanceInfo {
                matrix: format!("matrices/{id}.qbin"),
                instance_id: id,
                n,
                seed: instance_seed(spec.seed_base, n, k),
            });
        }
    }
    let manifest = Manifest {
        tool: "qf",
        version: env!("CARGO_PKG_VERSION"),
        spec,
        instance_range: [INSTANCE_LO, INSTANCE_HI],
        instances: &instances,
    };
    let manifest_path = out.join(MANIFEST_FILE);
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)
        .map_err(output_err(&manifest_path))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| BenchError::Config(e.to_string()))?;

    let matrices: Vec<QuboMatrix> = pool.install(|| {
        instances
            .par_iter()
            .map(|inst| -> Result<QuboMatrix> {
                let q = generate_qubo(inst.n, inst.seed, INSTANCE_LO, INSTANCE_HI)?;
                q.save(out.join(&inst.matrix))?;
                Ok(q)
            })
            .collect::<Result<_>>()
    })?;

    let mut cells = Vec::with_capacity(spec.cell_count());
    for inst in 0..instances.len() {
        for &backend in &spec.backends {
            for &threshold in &spec.thresholds {
                for repeat in 0..spec.repeats {
                    cells.push(Cell {
                        inst,
                        backend,
                        threshold,
                        repeat,
                    });
                }
            }
        }
    }

    let run_cell = |cell: &Cell| -> Result<CellResult> {
        let info = &instances[cell.inst];
        let q = &matrices[cell.inst];
        let seed = info.seed.wrapping_add(cell.repeat as u64);
        let cfg = spec.solver_config(cell.backend, cell.threshold, seed);
        let start = Instant::now();
        let solved = solve(q, &cfg);
        let wall_time_s = start.elapsed().as_secs_f64();
        match solved {
            Ok(res) => {
                let record = BenchRecord {
                    instance_id: info.instance_id.clone(),
                    backend: cell.backend,
                    n: info.n,
                    threshold: cell.threshold,
                    seed,
                    energy: res.energy.value(),
                    steps: res.steps,
                    wall_time_s,
                    stop_reason: res.stop_reason,
                };
                SolutionFile::new(&res.bits, res.energy)
                    .save(solutions_dir.join(record.solution_file_name()))?;
                Ok(CellResult::Done(record))
            }
            Err(e) => Ok(CellResult::Failed(RunFailure {
                instance_id: info.instance_id.clone(),
                backend: cell.backend,
                n: info.n,
                threshold: cell.threshold,
                seed,
                error: e.to_string(),
            })),
        }
    };
    let results: Vec<CellResult> =
        pool.install(|| cells.par_iter().map(run_cell).collect::<Result<_>>())?;

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            CellResult::Done(rec) => records.push(rec),
            CellResult::Failed(f) => failures.push(f),
        }
    }
    write_csv(&out.join(RECORDS_FILE), &records)?;
    write_csv(&out.join(FAILURES_FILE), &failures)?;
    Ok(ExperimentOutcome {
        output_dir: out,
        instances,
        records,
        failures,
    })
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records(path: impl AsRef<Path>, records: &[BenchRecord]) -> Result<()> {
    write_csv(path.as_ref(), records)
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<BenchRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let expected = csv_header();
    if header.iter().ne(expected.iter().copied()) {
        return Err(BenchError::Core(qf_core::QfError::Format(format!(
            "records header must be {}",
            expected.join(",")
        ))));
    }
    r.deserialize().map(|row| row.map_err(BenchError::from)).collect()
}

/// Fixed column order of `records.csv`.
pub fn csv_header() -> [&'static str; 9] {
    [
        "instance_id",
        "backend",
        "n",
        "threshold",
        "seed",
        "energy",
        "steps",
        "wall_time_s",
        "stop_reason",
    ]
}
