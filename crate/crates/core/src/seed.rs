//! Derivation of independent sub-seeds from one run seed.

/// SplitMix64 finalizer applied to `a ^ golden·(b + 1)`.
pub fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(b.wrapping_add(1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn mix3(a: u64, b: u64, c: u64) -> u64 {
    mix(mix(a, b), c)
}
