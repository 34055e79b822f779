//! Counter-based seeding.
//!
//! Every random draw is keyed by (master seed, stream, repetition, step),
//! so results do not depend on thread scheduling or on how many variates
//! earlier steps consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Bayesian = 1,
    Frequentist = 2,
    PreEstimation = 3,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of repetition `rep` in `stream`.
pub fn repetition_seed(master: u64, stream: Stream, rep: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(stream as u64)) ^ rep)
}

/// Generator for measurement `step` of a run seeded with `run_seed`.
pub fn step_rng(run_seed: u64, step: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    rng.set_stream(step);
    rng
}
