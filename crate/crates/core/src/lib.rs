//! Randomized-measurement estimation of out-of-time-ordered correlators
//! (OTOCs) in a long-range transverse-field Ising chain.
//!
//! The crate simulates the full measurement campaign classically: local
//! random unitaries, two measurement branches per unitary, projection noise,
//! optional shot-to-shot global dephasing, and the statistical estimators
//! that turn the resulting expectation values into modified OTOCs, second
//! moments and second Renyi entropies. Everything is checked against a dense
//! exact trace oracle.

pub mod analysis;
pub mod campaign;
pub mod error;
pub mod noise;
pub mod protocol;
pub mod rng;
pub mod spin;

pub use error::{Error, Result};
