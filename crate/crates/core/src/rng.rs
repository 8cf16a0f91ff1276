use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic generator for a stream identified by `seed` and a word path.
pub(crate) fn stream(seed: u64, path: impl IntoIterator<Item = u64>) -> ChaCha8Rng {
    let mut h = splitmix64(seed);
    for w in path {
        h = splitmix64(h ^ splitmix64(w));
    }
    ChaCha8Rng::seed_from_u64(h)
}
