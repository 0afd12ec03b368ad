//! Seed derivation.
//!
//! Every random draw in a run comes from one master seed. Repetition `i` of an
//! experiment uses `master + i`; inside a run each consumer reads its own
//! ChaCha8 stream of that run seed, so adding draws to one consumer never
//! shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream ids within one run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Trajectory = 0,
    Rssi = 1,
    Pdr = 2,
    Aoa = 3,
    Learning = 4,
    RandomBaseline = 5,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

pub fn run_seed(master: u64, run_index: u64) -> u64 {
    master.wrapping_add(run_index)
}
