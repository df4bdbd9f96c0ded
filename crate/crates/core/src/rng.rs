//! Seed derivation.
//!
//! Every random quantity in a run comes from one master seed. Each consumer owns a
//! ChaCha8 stream identified by a fixed stream id; per-particle draws additionally
//! address the keystream by word position so they do not depend on evaluation order.
//!
//! | stream id           | consumer                                  |
//! |---------------------|-------------------------------------------|
//! | 1, 2, 3             | turbulence white noise, axes u, v, w      |
//! | 4                   | position measurement noise                |
//! | 5                   | particle filter initial sampling          |
//! | 6                   | particle filter resampling offsets        |
//! | 7                   | genetic algorithm                         |
//! | 2^32 + i            | particle i process noise (block per step) |

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const TURBULENCE_U: u64 = 1;
pub const TURBULENCE_V: u64 = 2;
pub const TURBULENCE_W: u64 = 3;
pub const MEASUREMENT: u64 = 4;
pub const PF_INIT: u64 = 5;
pub const PF_RESAMPLE: u64 = 6;
pub const GA: u64 = 7;
pub const PF_PARTICLE_BASE: u64 = 1 << 32;

/// Keystream words reserved for one particle at one step. Six normals need far fewer.
pub const PARTICLE_BLOCK_WORDS: u128 = 256;

/// The generator for `stream` under `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Index-addressed generator: stream `stream`, positioned at `block`.
pub fn block(seed: u64, stream: u64, block: u64) -> ChaCha8Rng {
    let mut rng = self::stream(seed, stream);
    rng.set_word_pos(block as u128 * PARTICLE_BLOCK_WORDS);
    rng
}
