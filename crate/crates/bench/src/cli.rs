//! `qf` command line.
//!
//! Failures print a single `error[<kind>]: <message>` line on stderr, where
//! `kind` is one of `usage`, `validation`, `dimension`, `structure`,
//! `format`, `mismatch`, `config` or `io`.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use qf_core::qubo::{energy_binary, generate_qubo, verify_solution, SolutionFile};
use qf_core::{solve, Backend, BinaryVector, Energy, QuboMatrix, SolverConfig};

use crate::config::ExperimentSpec;
use crate::error::{BenchError, Result};
use crate::harness::{read_records, resolve_threads, run_experiment, INSTANCE_HI, INSTANCE_LO};
use crate::plot::emit_plots;

#[derive(Debug, Parser)]
#[command(name = "qf", version, about = "QUBO solvers and benchmark harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random symmetric instance and write it as QBIN.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = INSTANCE_LO, allow_negative_numbers = true)]
        lo: f64,
        #[arg(long, default_value_t = INSTANCE_HI, allow_negative_numbers = true)]
        hi: f64,
    },
    /// Solve one instance, write the solution JSON and print a result line.
    Solve {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        backend: Backend,
        #[arg(long)]
        threshold: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        slope: Option<f64>,
        #[arg(long)]
        sweeps: Option<usize>,
        #[arg(long)]
        reads: Option<usize>,
        #[arg(long)]
        max_steps: Option<u64>,
    },
    /// Run a sweep described by a spec file.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Worker count; `QF_THREADS` takes precedence.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Recompute a stored solution's energy.
    Verify {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        rel_tol: f64,
    },
    /// Draw energy and runtime plots from a records CSV.
    Plot {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return 0;
        }
        Err(e) => {
            let msg = e.kind().to_string();
            let detail = e.to_string();
            let first = detail.lines().next().unwrap_or(&msg);
            let _ = writeln!(err, "error[usage]: {}", first.trim_start_matches("error: "));
            return 2;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error[{}]: {e}", e.kind());
            1
        }
    }
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Gen { n, seed, out: path, lo, hi } => {
            let q = generate_qubo(n, seed, lo, hi)?;
            q.save(&path)?;
            writeln!(out, "wrote {} (n = {n})", path.display())?;
        }
        Command::Solve {
            matrix,
            backend,
            threshold,
            seed,
            out: path,
            slope,
            sweeps,
            reads,
            max_steps,
        } => {
            let q = QuboMatrix::load(&matrix)?;
            let mut cfg = SolverConfig::new(backend).with_threshold(threshold).with_seed(seed);
            if let Some(s) = slope {
                cfg.slope = s;
            }
            if let Some(s) = sweeps {
                cfg.anneal.schedule.sweeps = s;
            }
            if let Some(r) = reads {
                cfg.anneal.reads = r;
            }
            if let Some(m) = max_steps {
                cfg.max_steps = m;
            }
            let res = solve(&q, &cfg)?;
            SolutionFile::new(&res.bits, res.energy).save(&path)?;
            writeln!(out, "{}", serde_json::to_string(&res.summary())?)?;
        }
        Command::Bench {
            config,
            out_dir,
            threads,
        } => {
            let mut spec = ExperimentSpec::load(&config)?;
            spec.output_dir = out_dir;
            let threads = resolve_threads(threads)?;
            let outcome = run_experiment(&spec, threads)?;
            if !outcome.records.is_empty() {
                emit_plots(&outcome.records, outcome.output_dir.join("plots"))?;
            }
            writeln!(
                out,
                "{} records, {} failures in {}",
                outcome.records.len(),
                outcome.failures.len(),
                outcome.output_dir.display()
            )?;
        }
        Command::Verify {
            matrix,
            solution,
            rel_tol,
        } => {
            let q = QuboMatrix::load(&matrix)?;
            let sol = SolutionFile::load(&solution)?;
            if verify_solution(&q, &sol.bits, Energy(sol.energy), rel_tol)? {
                writeln!(out, "ok: energy {}", sol.energy)?;
            } else {
                let x = BinaryVector::from_ints(&sol.bits)?;
                return Err(BenchError::Mismatch {
                    claimed: sol.energy,
                    recomputed: energy_binary(&q, &x)?.value(),
                });
            }
        }
        Command::Plot { records, out_dir } => {
            let recs = read_records(&records)?;
            let files = emit_plots(&recs, &out_dir)?;
            for f in files {
                writeln!(out, "{}", f.display())?;
            }
        }
    }
    Ok(())
}
