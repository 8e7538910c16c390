//! Deterministic derivation of independent per-trial random streams from a
//! single master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 output mixing step.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream for trial `trial_id` under `master_seed`: the 256-bit
/// ChaCha8 key is four successive splitmix64 outputs seeded by mixing the
/// master seed with the trial id.
pub fn derive_rng_stream(master_seed: u64, trial_id: u64) -> ChaCha8Rng {
    let mut state = master_seed ^ trial_id.wrapping_mul(0xd6e8_feb8_6659_fd93);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
