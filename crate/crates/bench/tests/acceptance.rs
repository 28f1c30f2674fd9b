//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Set `QF_ACCEPTANCE_OUT=<dir>` to keep the n = 1000 sweep output.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use qf_bench::harness::{csv_header, RECORDS_FILE};
use qf_bench::plot::{energy_file_name, runtime_file_name};
use qf_bench::{emit_plots, run_experiment, BenchRecord, ExperimentOutcome, ExperimentSpec};
use qf_core::anneal::{anneal, beta_schedule, AnnealConfig, AnnealSchedule, FlipState};
use qf_core::optim::{CLAMP_HI, CLAMP_LO};
use qf_core::qubo::{energy_binary, energy_relaxed, generate_qubo, verify_solution, SolutionFile};
use qf_core::relaxation::{relaxed_loss_and_grad, ContinuousVector, RelaxedObjective};
use qf_core::rng::{self, Domain};
use qf_core::solver::{DEFAULT_MAX_STEPS, DEFAULT_REPEATS, PAPER_THRESHOLDS};
use qf_core::{solve, Backend, BinaryVector, Energy, QuboMatrix, SolverConfig};
use rand::{Rng, RngCore};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn naive_energy(q: &QuboMatrix, x: &[u8]) -> f64 {
    let n = q.n();
    let mut e = 0.0;
    for i in 0..n {
        for j in 0..n {
            e += x[i] as f64 * q.get(i, j) * x[j] as f64;
        }
    }
    e
}

fn random_bits<R: RngCore>(rng: &mut R, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}

fn sa_oracle() -> Outcome {
    let start = Instant::now();
    let mut exact = 0;
    let mut below = 0;
    for k in 0..100u64 {
        let q = generate_qubo(12, 1000 + k, -5.0, 5.0).map_err(|e| e.to_string())?;
        let mut best = f64::INFINITY;
        for code in 0u32..(1 << 12) {
            let x: Vec<u8> = (0..12).map(|i| ((code >> i) & 1) as u8).collect();
            best = best.min(naive_energy(&q, &x));
        }
        let mut cfg = AnnealConfig::new(k);
        cfg.schedule = AnnealSchedule {
            beta_min: 0.1,
            beta_max: 4.0,
            sweeps: 2000,
        };
        cfg.reads = 10;
        let e = anneal(&q, &cfg).map_err(|e| e.to_string())?.energy.value();
        if (e - best).abs() <= 1e-9 {
            exact += 1;
        }
        if e < best - 1e-9 {
            below += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        exact >= 95 && below == 0 && secs < 60.0,
        format!("{exact}/100 exact, {below} below the optimum, {secs:.1} s"),
    )
}

fn gradient_fd() -> Outcome {
    let mut worst: f64 = 0.0;
    for s in [1.0, 10.0] {
        for k in 0..10u64 {
            let q = generate_qubo(50, 2000 + k, -5.0, 5.0).map_err(|e| e.to_string())?;
            let mut r = rng::stream(k, Domain::Baseline, 7);
            let params: Vec<f64> = (0..50).map(|_| r.random_range(CLAMP_LO..CLAMP_HI)).collect();
            let x = ContinuousVector::new(params.clone(), s).map_err(|e| e.to_string())?;
            let (_, g) = relaxed_loss_and_grad(&q, &x).map_err(|e| e.to_string())?;
            let mut obj = RelaxedObjective::new(&q, s);
            let h = 1e-5;
            for i in 0..50 {
                let mut p = params.clone();
                p[i] += h;
                let up = obj.loss(&p);
                p[i] -= 2.0 * h;
                let dn = obj.loss(&p);
                let fd = (up - dn) / (2.0 * h);
                worst = worst.max((g[i] - fd).abs() / fd.abs().max(1.0));
            }
        }
    }
    check(worst < 1e-6, format!("max relative error {worst:.2e}"))
}

fn energy_identity() -> Outcome {
    let q = generate_qubo(500, 3000, -5.0, 5.0).map_err(|e| e.to_string())?;
    let mut r = rng::stream(3, Domain::Baseline, 0);
    let (mut worst_bin, mut worst_rel): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let bits = random_bits(&mut r, 500);
        let naive = naive_energy(&q, &bits);
        let xp: Vec<f64> = bits.iter().map(|&b| b as f64).collect();
        let x = BinaryVector::new(bits).map_err(|e| e.to_string())?;
        let e = energy_binary(&q, &x).map_err(|e| e.to_string())?.value();
        let relaxed = energy_relaxed(&q, &xp).map_err(|e| e.to_string())?.value();
        worst_bin = worst_bin.max((e - naive).abs() / naive.abs().max(1.0));
        worst_rel = worst_rel.max((relaxed - e).abs() / e.abs().max(1.0));
    }
    check(
        worst_bin <= 1e-9 && worst_rel <= 1e-9,
        format!("binary vs naive {worst_bin:.1e}, relaxed vs binary {worst_rel:.1e}"),
    )
}

fn delta_consistency() -> Outcome {
    let q = generate_qubo(200, 4000, -5.0, 5.0).map_err(|e| e.to_string())?;
    let betas = beta_schedule(&AnnealSchedule {
        beta_min: 0.1,
        beta_max: 4.0,
        sweeps: 50,
    })
    .map_err(|e| e.to_string())?;
    let mut r = rng::stream(4, Domain::Baseline, 0);
    let init = BinaryVector::new(random_bits(&mut r, 200)).map_err(|e| e.to_string())?;
    let mut state = FlipState::new(&q, init).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut checkpoints = 0;
    for step in 0..10_000 {
        state.metropolis(betas[step / 200], &mut r);
        if step % 100 == 99 {
            checkpoints += 1;
            worst = worst.max((state.energy() - naive_energy(&q, state.bits())).abs());
            for (a, b) in state.fields().iter().zip(state.recomputed_fields()) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    check(
        checkpoints == 100 && worst <= 1e-9,
        format!("{checkpoints} checkpoints, max drift {worst:.1e}"),
    )
}

fn strip_wall_time(csv_text: &str) -> String {
    let col = csv_header().iter().position(|h| *h == "wall_time_s").unwrap();
    csv_text
        .lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            f.remove(col);
            f.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn determinism() -> Outcome {
    let q = generate_qubo(200, 5000, -5.0, 5.0).map_err(|e| e.to_string())?;
    for b in Backend::ALL {
        let cfg = SolverConfig::new(b).with_threshold(1e-4).with_seed(9);
        let x = solve(&q, &cfg).map_err(|e| e.to_string())?;
        let y = solve(&q, &cfg).map_err(|e| e.to_string())?;
        if x.bits != y.bits || x.energy.value().to_bits() != y.energy.value().to_bits() || x.steps != y.steps {
            return Err(format!("{b}: repeated solve differs"));
        }
    }
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut csvs = Vec::new();
    for (dir, threads) in dirs.iter().zip([1, 4]) {
        let mut spec = ExperimentSpec::new(vec![100], 77, dir.path());
        spec.thresholds = vec![1e-1, 1e-4];
        spec.repeats = 2;
        spec.instances_per_size = 2;
        run_experiment(&spec, threads).map_err(|e| e.to_string())?;
        csvs.push(fs::read_to_string(dir.path().join(RECORDS_FILE)).map_err(|e| e.to_string())?);
    }
    if strip_wall_time(&csvs[0]) != strip_wall_time(&csvs[1]) {
        return Err("records differ between runs".into());
    }
    let mut files = 0;
    for entry in fs::read_dir(dirs[0].path().join("solutions")).unwrap() {
        let name = entry.unwrap().file_name();
        let a = fs::read(dirs[0].path().join("solutions").join(&name)).unwrap();
        let b = fs::read(dirs[1].path().join("solutions").join(&name)).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("{name:?} differs"));
        }
        files += 1;
    }
    Ok(format!(
        "4 backends re-solved identically; {} records and {files} solution files identical at 1 vs 4 threads",
        csvs[0].lines().count() - 1
    ))
}

fn config_snapshot() -> Outcome {
    let sa = SolverConfig::new(Backend::Sa);
    let adam = SolverConfig::new(Backend::Adam);
    let adamw = SolverConfig::new(Backend::Adamw);
    let lbfgs = SolverConfig::new(Backend::Lbfgs);
    let spec = ExperimentSpec::new(vec![1000], 0, "");
    let snapshot = format!(
        "beta_min={} beta_max={} reads={} lr={} lr_w={} weight_decay={} clamp=[{},{}] max_steps={} thresholds={:?} repeats={} spec_thresholds={:?} spec_repeats={}",
        sa.anneal.schedule.beta_min,
        sa.anneal.schedule.beta_max,
        sa.anneal.reads,
        adam.adam.lr,
        adamw.adam.lr,
        adamw.adam.weight_decay,
        adam.clamp_lo,
        adam.clamp_hi,
        DEFAULT_MAX_STEPS,
        PAPER_THRESHOLDS,
        DEFAULT_REPEATS,
        spec.thresholds,
        spec.repeats,
    );
    let expected = "beta_min=0.1 beta_max=4 reads=10 lr=0.01 lr_w=0.01 weight_decay=0.00001 clamp=[-5,5] max_steps=1000000 thresholds=[0.1, 0.01, 0.001, 0.0001, 1e-5, 1e-6] repeats=5 spec_thresholds=[0.1, 0.01, 0.001, 0.0001, 1e-5, 1e-6] spec_repeats=5";
    let same_limits = [&sa, &adam, &adamw, &lbfgs]
        .iter()
        .all(|c| c.max_steps == 1_000_000 && c.clamp_lo == -5.0 && c.clamp_hi == 5.0);
    check(
        snapshot == expected && same_limits,
        if snapshot == expected { "defaults match snapshot".into() } else { snapshot },
    )
}

struct Sweep {
    dir: PathBuf,
    outcome: ExperimentOutcome,
    secs: f64,
    _tmp: Option<tempfile::TempDir>,
}

fn paper_sweep() -> Result<Sweep, String> {
    let (dir, tmp) = match std::env::var_os("QF_ACCEPTANCE_OUT") {
        Some(d) => (PathBuf::from(d), None),
        None => {
            let t = tempfile::tempdir().map_err(|e| e.to_string())?;
            (t.path().to_path_buf(), Some(t))
        }
    };
    let spec = ExperimentSpec::new(vec![1000], 20_240_601, &dir);
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let start = Instant::now();
    let outcome = run_experiment(&spec, threads).map_err(|e| e.to_string())?;
    Ok(Sweep {
        dir,
        outcome,
        secs: start.elapsed().as_secs_f64(),
        _tmp: tmp,
    })
}

fn load_csv(dir: &Path) -> Result<Vec<BenchRecord>, String> {
    let mut r = csv::Reader::from_path(dir.join(RECORDS_FILE)).map_err(|e| e.to_string())?;
    r.deserialize().collect::<Result<_, _>>().map_err(|e| e.to_string())
}

/// `data-*` attributes of every plotted point: (backend, threshold, value).
fn svg_points(svg: &str) -> Vec<(String, f64, f64)> {
    let attr = |tag: &str, key: &str| -> String {
        let k = format!("{key}=\"");
        let at = tag.find(&k).unwrap() + k.len();
        tag[at..].split('"').next().unwrap().to_string()
    };
    svg.split("<circle")
        .skip(1)
        .map(|tag| {
            let tag = tag.split("/>").next().unwrap();
            (
                attr(tag, "data-backend"),
                attr(tag, "data-threshold").parse().unwrap(),
                attr(tag, "data-value").parse().unwrap(),
            )
        })
        .collect()
}

fn harness_integrity(sweep: &Sweep) -> Outcome {
    let recs = load_csv(&sweep.dir)?;
    if recs.len() != 600 || !sweep.outcome.failures.is_empty() {
        return Err(format!("{} records, {} failures", recs.len(), sweep.outcome.failures.len()));
    }
    let mut matrices: BTreeMap<String, QuboMatrix> = BTreeMap::new();
    for r in &recs {
        if !matrices.contains_key(&r.instance_id) {
            let q = QuboMatrix::load(sweep.dir.join(format!("matrices/{}.qbin", r.instance_id)))
                .map_err(|e| e.to_string())?;
            matrices.insert(r.instance_id.clone(), q);
        }
        let sol = SolutionFile::load(sweep.dir.join("solutions").join(r.solution_file_name()))
            .map_err(|e| e.to_string())?;
        let ok = verify_solution(&matrices[&r.instance_id], &sol.bits, Energy(r.energy), 1e-9)
            .map_err(|e| e.to_string())?;
        if !ok || sol.energy != r.energy {
            return Err(format!("record {} fails verification", r.solution_file_name()));
        }
    }

    let plots = sweep.dir.join("plots");
    let files = emit_plots(&recs, &plots).map_err(|e| e.to_string())?;
    let energy_files = files.iter().filter(|p| p.file_name().unwrap().to_str().unwrap().starts_with("energy_")).count();
    let runtime_files = files.len() - energy_files;
    if (energy_files, runtime_files) != (5, 1) {
        return Err(format!("{energy_files} energy plots, {runtime_files} runtime plots"));
    }

    let mut compared = 0;
    let ids: Vec<String> = matrices.keys().cloned().collect();
    for id in &ids {
        let svg = fs::read_to_string(plots.join(energy_file_name(id))).map_err(|e| e.to_string())?;
        let pts = svg_points(&svg);
        if pts.len() != 24 {
            return Err(format!("{id}: {} points", pts.len()));
        }
        for (b, t, v) in pts {
            let min = recs
                .iter()
                .filter(|r| &r.instance_id == id && r.backend.as_str() == b && r.threshold == t)
                .map(|r| r.energy)
                .fold(f64::INFINITY, f64::min);
            if min != v {
                return Err(format!("{id} {b} {t}: plotted {v}, csv min {min}"));
            }
            compared += 1;
        }
    }
    let svg = fs::read_to_string(plots.join(runtime_file_name(1000))).map_err(|e| e.to_string())?;
    let pts = svg_points(&svg);
    if pts.len() != 24 {
        return Err(format!("runtime plot: {} points", pts.len()));
    }
    for (b, t, v) in pts {
        let walls: Vec<f64> = recs
            .iter()
            .filter(|r| r.backend.as_str() == b && r.threshold == t)
            .map(|r| r.wall_time_s)
            .collect();
        let mean = walls.iter().sum::<f64>() / walls.len() as f64;
        if mean != v || walls.len() != 25 {
            return Err(format!("runtime {b} {t}: plotted {v}, csv mean {mean}"));
        }
        compared += 1;
    }
    Ok(format!(
        "600 records verified, 5 energy + 1 runtime plots, {compared} plotted values equal CSV aggregates, sweep {:.0} s",
        sweep.secs
    ))
}

/// Best-of-repeats energy per instance, keyed by (backend, threshold bits).
fn best_of(recs: &[BenchRecord]) -> BTreeMap<(Backend, u64), BTreeMap<String, f64>> {
    let mut m: BTreeMap<(Backend, u64), BTreeMap<String, f64>> = BTreeMap::new();
    for r in recs {
        let e = m
            .entry((r.backend, r.threshold.to_bits()))
            .or_default()
            .entry(r.instance_id.clone())
            .or_insert(f64::INFINITY);
        *e = e.min(r.energy);
    }
    m
}

fn threshold_trend(sweep: &Sweep) -> Outcome {
    let recs = load_csv(&sweep.dir)?;
    let best = best_of(&recs);
    let mut ok = sweep.secs < 1800.0;
    let mut parts = Vec::new();
    for b in [Backend::Adam, Backend::Adamw, Backend::Lbfgs] {
        let mean_e = |t: f64| {
            let v = &best[&(b, t.to_bits())];
            v.values().sum::<f64>() / v.len() as f64
        };
        let mean_steps = |t: f64| {
            let s: Vec<u64> = recs.iter().filter(|r| r.backend == b && r.threshold == t).map(|r| r.steps).collect();
            s.iter().sum::<u64>() as f64 / s.len() as f64
        };
        let (e1, e6) = (mean_e(1e-1), mean_e(1e-6));
        let (s1, s6) = (mean_steps(1e-1), mean_steps(1e-6));
        ok &= e6 <= e1 && s6 >= s1;
        parts.push(format!("{b}: E {e1:.0} -> {e6:.0}, steps {s1:.0} -> {s6:.0}"));
    }
    check(ok, format!("{}; sweep {:.0} s", parts.join("; "), sweep.secs))
}

fn beats_random(sweep: &Sweep) -> Outcome {
    let recs = load_csv(&sweep.dir)?;
    let best = best_of(&recs);
    let mut ok = true;
    let mut worst_margin = f64::INFINITY;
    let mut strict_instances = 0;
    for info in &sweep.outcome.instances {
        let q = QuboMatrix::load(sweep.dir.join(&info.matrix)).map_err(|e| e.to_string())?;
        let mut r = rng::stream(info.seed, Domain::Baseline, 0);
        let mut baseline = f64::INFINITY;
        for _ in 0..10_000 {
            let x = BinaryVector::new(random_bits(&mut r, q.n())).unwrap();
            baseline = baseline.min(energy_binary(&q, &x).unwrap().value());
        }
        let mut strict = true;
        for b in Backend::ALL {
            for t in PAPER_THRESHOLDS {
                let e = best[&(b, t.to_bits())][&info.instance_id];
                ok &= e <= baseline;
                strict &= e < baseline;
                worst_margin = worst_margin.min(baseline - e);
            }
        }
        strict_instances += usize::from(strict);
    }
    check(
        ok && strict_instances >= 4,
        format!(
            "strictly below the random baseline on {strict_instances}/5 instances for every backend and threshold, smallest margin {worst_margin:.0}"
        ),
    )
}

fn main() {
    let mut failed = 0;
    let mut report = |id: usize, name: &str, res: Outcome| {
        match &res {
            Ok(d) => println!("PASS {id} {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL {id} {name}: {d}")
            }
        }
    };
    report(1, "sa-matches-brute-force", sa_oracle());
    report(2, "gradient-finite-differences", gradient_fd());
    report(3, "energy-identity", energy_identity());
    report(4, "delta-energy-consistency", delta_consistency());
    report(7, "determinism", determinism());
    report(8, "default-config-snapshot", config_snapshot());
    match paper_sweep() {
        Ok(sweep) => {
            report(5, "threshold-trend", threshold_trend(&sweep));
            report(6, "beats-random-baseline", beats_random(&sweep));
            report(9, "harness-integrity", harness_integrity(&sweep));
        }
        Err(e) => {
            for (id, name) in [(5, "threshold-trend"), (6, "beats-random-baseline"), (9, "harness-integrity")] {
                report(id, name, Err(format!("sweep failed: {e}")));
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
