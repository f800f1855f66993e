//! Seeded, stream-indexed random number generators. Every random draw in the
//! crate comes from `(seed, purpose, index)`, so Monte-Carlo trials and user
//! drops are independent of evaluation order and thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purpose {
    /// User placement for drop `index`.
    Drop = 1,
    /// Channel gains for Monte-Carlo trial `index`.
    Fading = 2,
    /// Auxiliary draws (e.g. which user is inspected) for drop `index`.
    Aux = 3,
}

pub fn rng_for(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mixed = seed ^ (purpose as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut rng = ChaCha8Rng::seed_from_u64(mixed);
    rng.set_stream(index);
    rng
}
