//! Deterministic random-number streams.
//!
//! One master seed fans out to independent named substreams, so concurrent
//! sweep points and particles draw identical numbers no matter how work is
//! scheduled across threads. A substream is addressed by a task label plus
//! an index; the pair is hashed into the generator's stream id.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator all simulations draw from.
pub type Stream = ChaCha8Rng;

/// FNV-1a over the task label and the little-endian index.
#[must_use]
pub fn stream_id(task: &str, index: u64) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash = OFFSET;
    for byte in task.as_bytes().iter().chain(index.to_le_bytes().iter()) {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(PRIME);
    }
    hash
}

/// A generator seeded by the master seed on the substream `(task, index)`.
#[must_use]
pub fn substream(master_seed: u64, task: &str, index: u64) -> Stream {
    let mut rng = Stream::seed_from_u64(master_seed);
    rng.set_stream(stream_id(task, index));
    rng
}
