//! Seed derivation for reproducible parallel work.
//!
//! Every stochastic step draws from its own ChaCha stream, addressed by the
//! master seed plus a small tuple of coordinates (purpose tag, iteration,
//! particle, ...). Results therefore do not depend on how work is scheduled
//! across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags keep streams for different stages disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Split = 1,
    Synth = 2,
    Tree = 3,
    SwarmInit = 4,
    SwarmStep = 5,
    KMeans = 6,
    Select = 7,
    Spheres = 8,
    Queries = 9,
    Run = 10,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a seed with a stream tag and coordinates into a new 64-bit seed.
pub fn derive_seed(seed: u64, stream: Stream, coords: &[u64]) -> u64 {
    let mut h = splitmix64(seed ^ splitmix64(stream as u64));
    for &c in coords {
        h = splitmix64(h ^ splitmix64(c.wrapping_add(0x5851_F42D_4C95_7F2D)));
    }
    h
}

/// A fresh generator for the given stream coordinates.
pub fn substream(seed: u64, stream: Stream, coords: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream, coords))
}
