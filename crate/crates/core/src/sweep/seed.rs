use super::Engine;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX_1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX_2: u64 = 0x94D0_49BB_1331_11EB;

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(MIX_1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX_2);
    z ^ (z >> 31)
}

/// Seed of one grid cell: each input is folded into a SplitMix64 chain in the
/// order master, `i_k`, `i_gamma`, engine tag, so swapping indices or engines
/// changes the result.
pub fn cell_seed(master: u64, i_k: usize, i_gamma: usize, engine: Engine) -> u64 {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ i_k as u64);
    h = splitmix64(h ^ i_gamma as u64);
    splitmix64(h ^ engine.seed_tag())
}
