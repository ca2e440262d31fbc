//! Seed plumbing. Every stochastic component receives an explicit seed and
//! derives independent child streams from it with [`derive_seed`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for stream `stream` of `seed`.
#[inline]
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    mix64(mix64(seed) ^ mix64(stream.wrapping_add(0x632B_E59B_D9B4_E019)))
}

/// Child seed keyed by a static tag, e.g. `"init"` or `"batches"`.
pub fn derive_tagged(seed: u64, tag: &str) -> u64 {
    // FNV-1a over the tag bytes; stable across platforms and toolchains.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    derive_seed(seed, h)
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Number of items selected by a fraction `f` of `n`, i.e. `floor(f * n)`,
/// tolerant to representation error such as `0.29 * 100 = 28.999...`.
pub fn fraction_count(f: f64, n: usize) -> usize {
    let raw = f * n as f64;
    let k = (raw + 1e-9).floor();
    (k.max(0.0) as usize).min(n)
}
