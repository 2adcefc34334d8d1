//! Keyed random streams.
//!
//! Every random draw in a campaign comes from a ChaCha8 stream addressed by
//! `(master seed, purpose, unitary index, cell id)`. Streams never depend on
//! which worker evaluates a cell or in which order, so datasets are
//! bit-identical for any degree of parallelism.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Part of the key so that, e.g., the unitary draw
/// for index `r` is shared by noisy and noiseless campaigns with one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    LocalUnitary = 1,
    Shots = 2,
    InitialState = 3,
    ReadoutUnitary = 4,
    EntropyShots = 5,
    Ramsey = 6,
    Calibration = 7,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the stream for one cell. `unitary_index` and `cell` must each fit
/// in 32 bits; together they select one of the 2^64 ChaCha streams.
pub fn stream(master_seed: u64, purpose: Purpose, unitary_index: u64, cell: u64) -> ChaCha8Rng {
    debug_assert!(unitary_index < 1 << 32 && cell < 1 << 32);
    let mut state = master_seed ^ (purpose as u64).wrapping_mul(0xA24B_AED4_963E_E407);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream((unitary_index << 32) | cell);
    rng
}

/// Cell id of one `(time, branch, initial state)` measurement setting.
pub fn cell_id(time_index: usize, v_applied: bool, state_id: usize) -> u64 {
    debug_assert!(state_id < 1 << 15 && time_index < 1 << 16);
    ((time_index as u64) << 16) | ((state_id as u64) << 1) | v_applied as u64
}
