//! Seed derivation for independent deterministic RNG streams.
//!
//! Parallel or reordered execution of per-(restart | sample | repetition)
//! work must not change results, so every unit of work gets a seed derived
//! from the base seed and its indices rather than sharing one stream.

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut s = splitmix64(base);
    s = splitmix64(s ^ a);
    splitmix64(s ^ b)
}
