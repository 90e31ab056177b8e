//! Seeded random streams.
//!
//! Every Monte Carlo routine draws from a ChaCha8 generator keyed by the user
//! seed and a domain tag, with the 64-bit ChaCha stream id selecting the
//! trial (or chunk) index. A given `(seed, domain, index)` therefore always
//! sees the same numbers, whichever worker thread happens to run it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Tags separating the independent uses of one user seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    CostSample { n: u64 },
    LimitPool { generation: u64 },
    FiniteCost { n: u64 },
    RecursiveLimit,
    Instances,
}

impl Domain {
    fn key(self) -> (u64, u64) {
        match self {
            Domain::CostSample { n } => (1, n),
            Domain::LimitPool { generation } => (2, generation),
            Domain::FiniteCost { n } => (3, n),
            Domain::RecursiveLimit => (4, 0),
            Domain::Instances => (5, 0),
        }
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let (tag, param) = domain.key();
    let mut key = [0u8; 32];
    let words = [seed, tag, param, mix(seed ^ mix(tag ^ mix(param)))];
    for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
