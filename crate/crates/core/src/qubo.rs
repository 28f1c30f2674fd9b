//! Problem representation, instance generation and energy evaluation.
//!
//! The QUBO objective is `E(x) = xᵀ Q x` over `x ∈ {0,1}ⁿ` with `Q` real
//! symmetric. At binary points `xᵢ² = xᵢ`, so the energy can be evaluated
//! from the diagonal and the strict upper triangle alone:
//!
//! ```text
//! E(x) = Σᵢ Qᵢᵢ xᵢ + Σ_{i<j} (Qᵢⱼ + Qⱼᵢ) xᵢ xⱼ
//! ```

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{QfError, Result};
use crate::rng::{self, Domain};

/// Magic prefix of the binary matrix format.
pub const QBIN_MAGIC: &[u8; 4] = b"QUB1";

/// Largest `n` accepted by [`brute_force_min`].
pub const BRUTE_FORCE_CAP: usize = 20;

/// Dense symmetric QUBO matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct QuboMatrix {
    n: usize,
    data: Vec<f64>,
}

impl QuboMatrix {
    /// Builds a matrix from row-major data, checking shape, finiteness and
    /// exact (bitwise) symmetry.
    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(QfError::validation("matrix dimension must be at least 1"));
        }
        if data.len() != n * n {
            return Err(QfError::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(QfError::validation(format!(
                "entry ({}, {}) is not finite",
                k / n,
                k % n
            )));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if data[i * n + j].to_bits() != data[j * n + i].to_bits() {
                    return Err(QfError::validation(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(QuboMatrix { n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(QfError::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_vec(n, data)
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::from_vec(n, vec![0.0; n * n])
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut data = vec![0.0; n * n];
        for (i, &d) in diag.iter().enumerate() {
            data[i * n + i] = d;
        }
        Self::from_vec(n, data)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `out = Q x`.
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), x);
        }
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(QfError::DimensionMismatch {
                expected: self.n,
                found: len,
            });
        }
        Ok(())
    }

    /// Writes the `QUB1` binary format: magic, little-endian `u64` n, then
    /// n·n little-endian binary64 values row-major.
    pub fn write_qbin<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(QBIN_MAGIC)?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.data.len() * 8);
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_qbin<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| QfError::Format("truncated header".into()))?;
        if &magic != QBIN_MAGIC {
            return Err(QfError::Format("bad magic, expected QUB1".into()));
        }
        let mut nb = [0u8; 8];
        r.read_exact(&mut nb)
            .map_err(|_| QfError::Format("truncated header".into()))?;
        let n = u64::from_le_bytes(nb);
        let n = usize::try_from(n)
            .ok()
            .filter(|&n| n.checked_mul(n).and_then(|m| m.checked_mul(8)).is_some())
            .ok_or_else(|| QfError::Format(format!("dimension {n} too large")))?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != n * n * 8 {
            return Err(QfError::Format(format!(
                "payload is {} bytes, expected {}",
                bytes.len(),
                n * n * 8
            )));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::from_vec(n, data).map_err(|e| match e {
            QfError::Validation(m) => QfError::Format(m),
            other => other,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_qbin(std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_qbin(std::io::BufReader::new(f))
    }
}

/// Dot product with a fixed 4-lane accumulation order.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Candidate solution in `{0,1}ⁿ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BinaryVector(Vec<u8>);

impl BinaryVector {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(i) = bits.iter().position(|&b| b > 1) {
            return Err(QfError::NonBinary {
                index: i,
                value: bits[i] as i64,
            });
        }
        Ok(BinaryVector(bits))
    }

    /// Validates arbitrary integer entries, e.g. from a parsed file.
    pub fn from_ints(vals: &[i64]) -> Result<Self> {
        if let Some(i) = vals.iter().position(|&v| v != 0 && v != 1) {
            return Err(QfError::NonBinary {
                index: i,
                value: vals[i],
            });
        }
        Ok(BinaryVector(vals.iter().map(|&v| v as u8).collect()))
    }

    pub fn zeros(n: usize) -> Self {
        BinaryVector(vec![0; n])
    }

    pub fn ones(n: usize) -> Self {
        BinaryVector(vec![1; n])
    }

    /// Bit `i` of `code` becomes entry `i` (bit 0 is least significant).
    pub fn from_code(code: u64, n: usize) -> Self {
        BinaryVector((0..n).map(|i| (code.checked_shr(i as u32).unwrap_or(0) & 1) as u8).collect())
    }

    pub fn code(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .fold(0u64, |c, (i, &b)| c | ((b as u64) << i))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }

    /// Flips entry `i`. Panics when out of range.
    pub fn flip(&mut self, i: usize) {
        self.0[i] ^= 1;
    }
}

/// Value of the QUBO objective.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Energy(pub f64);

impl Energy {
    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Draws `R` with i.i.d. entries uniform in `[lo, hi)` from the instance
/// stream of `seed` (row-major order, one `u64` per entry), and returns
/// `(R + Rᵀ) / 2`.
///
/// `lo == hi` is accepted and yields a constant matrix.
pub fn generate_qubo(n: usize, seed: u64, lo: f64, hi: f64) -> Result<QuboMatrix> {
    if n == 0 {
        return Err(QfError::validation("n must be at least 1"));
    }
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(QfError::validation(format!(
            "invalid range [{lo}, {hi}]: need finite lo <= hi"
        )));
    }
    let mut rng = rng::stream(seed, Domain::Instance, 0);
    let width = hi - lo;
    let raw: Vec<f64> = (0..n * n)
        .map(|_| lo + width * rng::unit_f64(&mut rng))
        .collect();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        data[i * n + i] = raw[i * n + i];
        for j in (i + 1)..n {
            let v = 0.5 * (raw[i * n + j] + raw[j * n + i]);
            // Averaging can round past an endpoint only when both draws sit on it.
            let v = v.clamp(lo, hi);
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    QuboMatrix::from_vec(n, data)
}

/// Canonical binary energy, evaluated over the diagonal and upper triangle.
pub fn energy_binary(q: &QuboMatrix, x: &BinaryVector) -> Result<Energy> {
    q.check_len(x.len())?;
    Ok(Energy(energy_bits_unchecked(q, x.as_slice())))
}

pub(crate) fn energy_bits_unchecked(q: &QuboMatrix, bits: &[u8]) -> f64 {
    let n = q.n();
    let mut e = 0.0;
    for i in 0..n {
        if bits[i] == 0 {
            continue;
        }
        let row = q.row(i);
        let mut acc = row[i];
        for j in (i + 1)..n {
            if bits[j] != 0 {
                acc += row[j] + row[j];
            }
        }
        e += acc;
    }
    e
}

/// Full quadratic form `xᵀ Q x` for a real vector.
pub fn energy_relaxed(q: &QuboMatrix, xp: &[f64]) -> Result<Energy> {
    q.check_len(xp.len())?;
    let mut e = 0.0;
    for (i, &xi) in xp.iter().enumerate() {
        if xi != 0.0 {
            e += xi * dot(q.row(i), xp);
        }
    }
    Ok(Energy(e))
}

/// Local fields `Lᵢ = Qᵢᵢ + 2 Σ_{j≠i} Qᵢⱼ xⱼ`; flipping bit `i` changes the
/// energy by `(1 − 2xᵢ) Lᵢ`.
pub fn local_fields(q: &QuboMatrix, bits: &[u8]) -> Vec<f64> {
    let n = q.n();
    (0..n)
        .map(|i| {
            let row = q.row(i);
            let mut s = 0.0;
            for (j, &b) in bits.iter().enumerate() {
                if b != 0 && j != i {
                    s += row[j];
                }
            }
            row[i] + 2.0 * s
        })
        .collect()
}

/// Exhaustive minimum over `{0,1}ⁿ`, `n ≤ 20`.
///
/// Walks the reflected Gray code so each step is a single flip with an
/// `O(n)` local-field update. Energies within `1e-12·max(1, |E|)` of each
/// other count as ties; ties go to the smallest integer encoding.
pub fn brute_force_min(q: &QuboMatrix) -> Result<(BinaryVector, Energy)> {
    let n = q.n();
    if n > BRUTE_FORCE_CAP {
        return Err(QfError::TooLarge {
            n,
            cap: BRUTE_FORCE_CAP,
        });
    }
    let mut bits = vec![0u8; n];
    let mut fields: Vec<f64> = (0..n).map(|i| q.get(i, i)).collect();
    let mut e = 0.0;
    let mut code: u64 = 0;
    let mut best_e: f64 = 0.0;
    let mut best_code: u64 = 0;
    for step in 1u64..(1u64 << n) {
        let k = step.trailing_zeros() as usize;
        let up = bits[k] == 0;
        e += if up { fields[k] } else { -fields[k] };
        bits[k] ^= 1;
        code ^= 1 << k;
        let delta = if up { 2.0 } else { -2.0 };
        let row = q.row(k);
        for (j, f) in fields.iter_mut().enumerate() {
            if j != k {
                *f += delta * row[j];
            }
        }
        let tol = 1e-12 * best_e.abs().max(1.0);
        if e < best_e - tol || (e <= best_e + tol && code < best_code) {
            best_e = e;
            best_code = code;
        }
    }
    let best = BinaryVector::from_code(best_code, n);
    let energy = energy_binary(q, &best)?;
    Ok((best, energy))
}

/// Recomputes the energy of `bits` and compares with `claimed` at relative
/// tolerance `rel_tol·max(1, |E|)`.
///
/// Entries other than 0/1 give [`QfError::NonBinary`], distinct from a
/// plain `Ok(false)` energy mismatch.
pub fn verify_solution(q: &QuboMatrix, bits: &[i64], claimed: Energy, rel_tol: f64) -> Result<bool> {
    if !(rel_tol > 0.0) {
        return Err(QfError::validation("rel_tol must be positive"));
    }
    q.check_len(bits.len())?;
    let x = BinaryVector::from_ints(bits)?;
    let e = energy_binary(q, &x)?.value();
    if !claimed.value().is_finite() {
        return Ok(false);
    }
    Ok((e - claimed.value()).abs() <= rel_tol * e.abs().max(1.0))
}

/// On-disk solution: `{"n": int, "bits": [0|1, ...], "energy": float}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub n: usize,
    pub bits: Vec<i64>,
    pub energy: f64,
}

impl SolutionFile {
    pub fn new(bits: &BinaryVector, energy: Energy) -> Self {
        SolutionFile {
            n: bits.len(),
            bits: bits.as_slice().iter().map(|&b| b as i64).collect(),
            energy: energy.value(),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let s = serde_json::to_string(self).map_err(|e| QfError::Format(e.to_string()))?;
        std::fs::write(path, s)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let s = std::fs::read_to_string(path)?;
        let sol: SolutionFile =
            serde_json::from_str(&s).map_err(|e| QfError::Format(e.to_string()))?;
        if sol.n != sol.bits.len() {
            return Err(QfError::Format(format!(
                "n = {} but {} bits listed",
                sol.n,
                sol.bits.len()
            )));
        }
        Ok(sol)
    }
}
