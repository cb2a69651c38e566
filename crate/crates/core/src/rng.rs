//! Deterministic random streams.
//!
//! Every random draw in a run comes from a `ChaCha8Rng` whose seed is derived
//! from the master seed and a small key (purpose tag plus indices). Workers that
//! own distinct keys never share state, so serial and parallel execution agree.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Purpose tags that keep streams for different pipeline steps apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Graph = 1,
    Pool = 2,
    Init = 3,
    Train = 4,
    Validation = 5,
    Selection = 6,
    Breed = 7,
    Padding = 8,
    Links = 9,
    Split = 10,
    Baseline = 11,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a key into a 64-bit stream seed.
pub fn derive_seed(master: u64, purpose: Purpose, key: &[u64]) -> u64 {
    let mut h = splitmix64(master ^ splitmix64(purpose as u64));
    for &k in key {
        h = splitmix64(h ^ splitmix64(k.wrapping_add(0x632B_E59B_D9B4_E019)));
    }
    h
}

pub fn stream(master: u64, purpose: Purpose, key: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(master, purpose, key))
}

pub fn from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
