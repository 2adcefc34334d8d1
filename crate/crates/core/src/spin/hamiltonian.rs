use std::f64::consts::TAU;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{dimension, DenseOperator, C64};
use crate::{Error, Result};

/// Long-range transverse-field Ising chain
///
/// `H = sum_{i<j} J0 / |i-j|^alpha sigma^x_i sigma^x_j + B sum_i sigma^z_i`.
///
/// `j0` and `b_field` are angular frequencies (rad/s). With
/// `double_count_pairs` every unordered pair enters twice, i.e. the sum runs
/// over all ordered pairs `i != j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub n_spins: usize,
    pub j0: f64,
    pub alpha: f64,
    pub b_field: f64,
    #[serde(default)]
    pub double_count_pairs: bool,
}

impl HamiltonianSpec {
    pub fn new(n_spins: usize, j0: f64, alpha: f64, b_field: f64) -> Result<Self> {
        let spec = Self { n_spins, j0, alpha, b_field, double_count_pairs: false };
        spec.validate()?;
        Ok(spec)
    }

    /// Same as [`new`](Self::new) with `j0` and `b_field` given in Hz
    /// (multiplied by 2 pi).
    pub fn from_hz(n_spins: usize, j0_hz: f64, alpha: f64, b_field_hz: f64) -> Result<Self> {
        Self::new(n_spins, TAU * j0_hz, alpha, TAU * b_field_hz)
    }

    pub fn validate(&self) -> Result<()> {
        dimension(self.n_spins)?;
        if !(self.j0.is_finite() && self.j0 >= 0.0) {
            return Err(Error::invalid(format!("j0 must be finite and >= 0, got {}", self.j0)));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::invalid(format!("alpha must be finite and > 0, got {}", self.alpha)));
        }
        if !self.b_field.is_finite() {
            return Err(Error::invalid("b_field must be finite"));
        }
        Ok(())
    }

    /// Coefficient of `sigma^x_i sigma^x_j` for one unordered pair (sites 1-based).
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let dist = i.abs_diff(j);
        if dist == 0 {
            return 0.0;
        }
        let c = self.j0 / (dist as f64).powf(self.alpha);
        if self.double_count_pairs {
            2.0 * c
        } else {
            c
        }
    }
}

/// The Hamiltonian as a real symmetric matrix (it has no imaginary entries).
pub fn build_hamiltonian_real(spec: &HamiltonianSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let n = spec.n_spins;
    let d = 1usize << n;
    let mut h = DMatrix::<f64>::zeros(d, d);
    for b in 0..d {
        // sum_i sigma^z_i = (#zeros - #ones)
        h[(b, b)] = spec.b_field * (n as f64 - 2.0 * b.count_ones() as f64);
    }
    for i in 1..=n {
        for j in (i + 1)..=n {
            let c = spec.coupling(i, j);
            let mask = (1usize << (i - 1)) | (1usize << (j - 1));
            for b in 0..d {
                h[(b ^ mask, b)] += c;
            }
        }
    }
    Ok(h)
}

pub fn build_hamiltonian(spec: &HamiltonianSpec) -> Result<DenseOperator> {
    let h = build_hamiltonian_real(spec)?;
    DenseOperator::new(h.map(|x| C64::new(x, 0.0)))
}
