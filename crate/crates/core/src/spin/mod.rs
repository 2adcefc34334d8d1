//! Dense exact quantum mechanics of an N-spin chain.
//!
//! Conventions used throughout the crate:
//!
//! * Sites are numbered `1..=N`. Site `i` is stored in bit `i - 1` of a basis
//!   index, so the index of `|k_1 k_2 ... k_N>` is `sum_i k_i 2^(i-1)`.
//! * `|0>` is the +1 eigenstate of `sigma^z`.
//! * The x-basis outcome bit of site `i` is 0 for `|+>` and 1 for `|->`.

mod basis;
mod hamiltonian;
mod measure;
mod operator;
mod otoc;
mod propagator;
mod state;

pub use basis::{dimension, SpinBasisState, MAX_SPINS};
pub use hamiltonian::{build_hamiltonian, build_hamiltonian_real, HamiltonianSpec};
pub(crate) use measure::sample_many;
pub use measure::{
    born_probabilities, sample_index, sample_measurement, walsh_hadamard, MeasurementBasis,
    ShotRecord,
};
pub use operator::{pauli_matrix, DenseOperator, LocalOperator, Pauli};
pub use otoc::{exact_otoc, OtocOracle};
pub use propagator::{make_propagator, Propagator};
pub use state::{expectation, StateVector};

pub type C64 = num_complex::Complex64;
pub type Matrix2c = nalgebra::Matrix2<C64>;

/// Applies a single-site 2x2 matrix to the amplitudes in place.
pub(crate) fn apply_local_in_place(amps: &mut [C64], site: usize, m: &Matrix2c) {
    let mask = 1usize << (site - 1);
    for b in 0..amps.len() {
        if b & mask == 0 {
            let a0 = amps[b];
            let a1 = amps[b | mask];
            amps[b] = m[(0, 0)] * a0 + m[(0, 1)] * a1;
            amps[b | mask] = m[(1, 0)] * a0 + m[(1, 1)] * a1;
        }
    }
}

pub(crate) fn check_site(n_spins: usize, site: usize) -> crate::Result<()> {
    if site == 0 || site > n_spins {
        return Err(crate::Error::invalid(format!(
            "site {site} outside 1..={n_spins}"
        )));
    }
    Ok(())
}
