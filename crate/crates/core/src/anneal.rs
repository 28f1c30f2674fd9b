//! Single-flip Metropolis simulated annealing.

use std::time::Instant;

use rand::{Rng, RngCore};

use crate::error::{QfError, Result};
use crate::qubo::{energy_bits_unchecked, local_fields, BinaryVector, Energy, QuboMatrix};
use crate::rng::{self, Domain};

/// Largest `β·ΔE` passed to `exp`.
const MAX_EXPONENT: f64 = 700.0;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AnnealSchedule {
    pub beta_min: f64,
    pub beta_max: f64,
    /// Temperatures visited; one sweep is `n` proposals at one temperature.
    pub sweeps: usize,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule {
            beta_min: 0.1,
            beta_max: 4.0,
            sweeps: 1_000,
        }
    }
}

impl AnnealSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta_min > 0.0 && self.beta_max.is_finite()) {
            return Err(QfError::validation("betas must be positive and finite"));
        }
        if self.beta_min > self.beta_max {
            return Err(QfError::validation("beta_min must not exceed beta_max"));
        }
        if self.sweeps == 0 {
            return Err(QfError::validation("sweeps must be at least 1"));
        }
        Ok(())
    }
}

/// `β_k = β_min·(β_max/β_min)^(k/(sweeps−1))`, with both endpoints exact.
pub fn beta_schedule(schedule: &AnnealSchedule) -> Result<Vec<f64>> {
    schedule.validate()?;
    let AnnealSchedule {
        beta_min,
        beta_max,
        sweeps,
    } = *schedule;
    if sweeps == 1 {
        return Ok(vec![beta_min]);
    }
    let ratio = beta_max / beta_min;
    let last = (sweeps - 1) as f64;
    let mut betas: Vec<f64> = (0..sweeps)
        .map(|k| beta_min * ratio.powf(k as f64 / last))
        .collect();
    betas[0] = beta_min;
    betas[sweeps - 1] = beta_max;
    Ok(betas)
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AnnealConfig {
    pub schedule: AnnealSchedule,
    pub reads: usize,
    pub seed: u64,
}

impl AnnealConfig {
    pub fn new(seed: u64) -> Self {
        AnnealConfig {
            schedule: AnnealSchedule::default(),
            reads: 10,
            seed,
        }
    }
}

/// `ΔE` for flipping bit `i`, given consistent local fields.
pub fn flip_delta(q: &QuboMatrix, x: &BinaryVector, fields: &[f64], i: usize) -> Result<f64> {
    q.check_len(x.len())?;
    q.check_len(fields.len())?;
    if i >= q.n() {
        return Err(QfError::validation(format!("index {i} out of range for n = {}", q.n())));
    }
    Ok((1.0 - 2.0 * x.as_slice()[i] as f64) * fields[i])
}

/// Binary state with incrementally maintained local fields and energy.
#[derive(Clone, Debug)]
pub struct FlipState<'a> {
    q: &'a QuboMatrix,
    bits: Vec<u8>,
    fields: Vec<f64>,
    energy: f64,
}

impl<'a> FlipState<'a> {
    pub fn new(q: &'a QuboMatrix, x: BinaryVector) -> Result<Self> {
        q.check_len(x.len())?;
        let bits = x.into_inner();
        let fields = local_fields(q, &bits);
        let energy = energy_bits_unchecked(q, &bits);
        Ok(FlipState {
            q,
            bits,
            fields,
            energy,
        })
    }

    #[inline]
    pub fn delta(&self, i: usize) -> f64 {
        if self.bits[i] == 0 {
            self.fields[i]
        } else {
            -self.fields[i]
        }
    }

    /// Flips bit `i`, updating the energy by `ΔE` and every other local
    /// field by `±2·Qⱼᵢ`.
    #[inline]
    pub fn flip(&mut self, i: usize) {
        let up = self.bits[i] == 0;
        self.energy += self.delta(i);
        self.bits[i] ^= 1;
        let row = self.q.row(i);
        let fi = self.fields[i];
        if up {
            for (f, &qij) in self.fields.iter_mut().zip(row) {
                *f += 2.0 * qij;
            }
        } else {
            for (f, &qij) in self.fields.iter_mut().zip(row) {
                *f -= 2.0 * qij;
            }
        }
        self.fields[i] = fi;
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    /// From-scratch energy of the current bits.
    pub fn recomputed_energy(&self) -> f64 {
        energy_bits_unchecked(self.q, &self.bits)
    }

    pub fn recomputed_fields(&self) -> Vec<f64> {
        local_fields(self.q, &self.bits)
    }

    /// One Metropolis proposal at inverse temperature `beta`; returns
    /// whether the flip was accepted.
    #[inline]
    pub fn metropolis<R: RngCore>(&mut self, beta: f64, rng: &mut R) -> (usize, bool) {
        let i = rng.random_range(0..self.bits.len());
        let de = self.delta(i);
        let accept = de <= 0.0 || rng::unit_f64(rng) < (-(beta * de).min(MAX_EXPONENT)).exp();
        if accept {
            self.flip(i);
        }
        (i, accept)
    }
}

#[derive(Clone, Debug)]
pub struct AnnealOutcome {
    pub bits: BinaryVector,
    /// Recomputed from scratch for the returned bits.
    pub energy: Energy,
    /// Index of the read that produced the result.
    pub best_read: usize,
    /// `reads × sweeps`.
    pub total_sweeps: u64,
    pub initial_energies: Vec<f64>,
    /// Best energy of each read, recomputed.
    pub read_energies: Vec<f64>,
    pub wall_time_s: f64,
}

struct ReadResult {
    bits: Vec<u8>,
    energy: f64,
    initial_energy: f64,
}

fn run_read(q: &QuboMatrix, betas: &[f64], seed: u64, read: usize) -> ReadResult {
    let n = q.n();
    let mut rng = rng::stream(seed, Domain::AnnealRead, read as u64);
    let init: Vec<u8> = (0..n).map(|_| (rng.next_u64() >> 63) as u8).collect();
    let mut state = FlipState::new(q, BinaryVector::new(init).expect("bits")).expect("dimension");
    let initial_energy = state.energy();

    // The best state is copied out lazily: only when leaving it uphill or sideways.
    let mut best_bits = state.bits.clone();
    let mut best_e = state.energy;
    let mut at_best = true;
    for &beta in betas {
        for _ in 0..n {
            let i = rng.random_range(0..n);
            let de = state.delta(i);
            let accept = de <= 0.0 || rng::unit_f64(&mut rng) < (-(beta * de).min(MAX_EXPONENT)).exp();
            if !accept {
                continue;
            }
            let new_e = state.energy + de;
            if new_e < best_e {
                state.flip(i);
                best_e = new_e;
                at_best = true;
            } else {
                if at_best {
                    best_bits.copy_from_slice(&state.bits);
                    at_best = false;
                }
                state.flip(i);
            }
        }
    }
    if at_best {
        best_bits.copy_from_slice(&state.bits);
    }
    let energy = energy_bits_unchecked(q, &best_bits);
    ReadResult {
        bits: best_bits,
        energy,
        initial_energy,
    }
}

/// Runs `cfg.reads` independent reads and returns the lowest-energy state
/// seen in any of them (ties go to the lower read index).
///
/// Read `r` draws from stream `(cfg.seed, AnnealRead, r)`: `n` initial bits
/// (top bit of one `u64` each), then per proposal a uniform index and, for
/// uphill moves only, one uniform acceptance draw.
pub fn anneal(q: &QuboMatrix, cfg: &AnnealConfig) -> Result<AnnealOutcome> {
    if cfg.reads == 0 {
        return Err(QfError::validation("reads must be at least 1"));
    }
    let betas = beta_schedule(&cfg.schedule)?;
    let start = Instant::now();
    let reads: Vec<ReadResult> = (0..cfg.reads)
        .map(|r| run_read(q, &betas, cfg.seed, r))
        .collect();
    let mut best = 0;
    for (r, res) in reads.iter().enumerate() {
        if res.energy < reads[best].energy {
            best = r;
        }
    }
    let wall_time_s = start.elapsed().as_secs_f64();
    let initial_energies = reads.iter().map(|r| r.initial_energy).collect();
    let read_energies = reads.iter().map(|r| r.energy).collect();
    let winner = reads.into_iter().nth(best).expect("at least one read");
    Ok(AnnealOutcome {
        bits: BinaryVector::new(winner.bits)?,
        energy: Energy(winner.energy),
        best_read: best,
        total_sweeps: (cfg.reads * cfg.schedule.sweeps) as u64,
        initial_energies,
        read_energies,
        wall_time_s,
    })
}
