//! Random stream derivation.
//!
//! Every random stream is a `ChaCha8` generator. The 64-bit user seed is
//! expanded into the 256-bit ChaCha key with `SeedableRng::seed_from_u64`
//! (PCG32 expansion), and the 64-bit ChaCha stream id is
//! `(domain << 56) | index`. Instance generation, solver initialisation and
//! each annealing read therefore draw from disjoint streams even when they
//! share a seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Domain {
    Instance = 1,
    GradientInit = 2,
    AnnealRead = 3,
    Baseline = 4,
}

pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    debug_assert!(index < (1 << 56));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 56) | (index & ((1 << 56) - 1)));
    rng
}

/// Uniform double in `[0, 1)` from the top 53 bits of one `u64` draw.
#[inline]
pub fn unit_f64<R: rand::RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
