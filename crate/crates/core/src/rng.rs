//! Deterministic RNG sub-streams.
//!
//! Every random quantity is drawn from a stream derived from the global seed, a fixed
//! label, and an index, so each module can be exercised in isolation and results do not
//! depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const GEOMETRY: &str = "geometry";
pub const RICIAN: &str = "rician";
pub const SCINTILLATION: &str = "scintillation";
pub const MONTE_CARLO: &str = "monte-carlo";

fn fnv1a(bytes: impl IntoIterator<Item = u8>, mut h: u64) -> u64 {
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Returns the stream for `(seed, label, index)`.
pub fn substream(seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = fnv1a(label.bytes(), 0xcbf2_9ce4_8422_2325);
    let h = fnv1a(index.to_le_bytes(), h);
    rng.set_stream(h);
    rng
}
