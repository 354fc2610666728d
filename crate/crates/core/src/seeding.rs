//! Seed derivation.
//!
//! A run has one master seed. Each component (environment, network init,
//! action sampling, probe noise, evaluation) gets its own stream:
//!
//! ```text
//! derive_seed(master, label, index) =
//!     splitmix64(splitmix64(master ^ fnv1a64(label)) + index)
//! ```
//!
//! Streams are ChaCha8 generators seeded from the derived value.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a64(label: &str) -> u64 {
    label.bytes().fold(FNV_OFFSET, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

pub fn derive_seed(master: u64, label: &str, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ fnv1a64(label)).wrapping_add(index))
}

pub fn stream(master: u64, label: &str, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, label, index))
}
