//! Deterministic seed derivation for per-example, per-sample noise streams.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for (example `i`, sample `s`) under a master seed:
/// `splitmix(splitmix(splitmix(master) ^ i) ^ s)`.
pub fn mix(master: u64, i: u64, s: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ i) ^ s)
}

/// Seed for the `k`-th independent stream (run, trial, fold) of an experiment.
pub fn stream(master: u64, k: u64) -> u64 {
    mix(master, k, u64::MAX)
}
