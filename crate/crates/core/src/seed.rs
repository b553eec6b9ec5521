//! Deterministic derivation of independent random streams from a root seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SvtRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a root seed with a path of indices into a child seed.
///
/// Different paths give statistically independent streams, and the result
/// does not depend on the order in which children are created.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix(root), |acc, &idx| splitmix(acc ^ splitmix(idx.wrapping_add(GOLDEN))))
}

pub fn rng_from_seed(seed: u64) -> SvtRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn child_rng(root: u64, path: &[u64]) -> SvtRng {
    rng_from_seed(derive_seed(root, path))
}
