//! Per-item RNG streams derived from a global seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit mix of `(seed, item)`; independent of platform and
/// scheduling order.
pub fn derive_seed(seed: u64, item: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ item.rotate_left(32) ^ splitmix64(item))
}

/// RNG stream for one image.
pub fn image_rng(seed: u64, image_id: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, image_id))
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
