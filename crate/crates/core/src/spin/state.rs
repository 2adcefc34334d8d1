use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{apply_local_in_place, DenseOperator, Matrix2c, SpinBasisState, C64};
use crate::{Error, Result};

pub(crate) const NORM_TOL: f64 = 1e-10;

/// A normalized pure state over the z basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_spins: usize,
    amplitudes: DVector<C64>,
}

impl StateVector {
    /// Wraps amplitudes, requiring a power-of-two length and unit norm.
    pub fn new(amplitudes: DVector<C64>) -> Result<Self> {
        let n_spins = spins_for_len(amplitudes.len())?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid(format!("state norm {norm} is not 1")));
        }
        Ok(Self { n_spins, amplitudes })
    }

    pub(crate) fn from_unnormalized(amplitudes: DVector<C64>) -> Self {
        let n_spins = amplitudes.len().trailing_zeros() as usize;
        Self { n_spins, amplitudes }
    }

    pub fn basis(k: &SpinBasisState) -> Self {
        let d = 1usize << k.n_spins();
        let mut amplitudes = DVector::zeros(d);
        amplitudes[k.index()] = C64::new(1.0, 0.0);
        Self { n_spins: k.n_spins(), amplitudes }
    }

    /// `(u_1 (x) ... (x) u_N)|k>`, built directly as a product state.
    pub fn rotated_product(k: &SpinBasisState, unitaries: &[Matrix2c]) -> Result<Self> {
        if unitaries.len() != k.n_spins() {
            return Err(Error::DimensionMismatch { expected: k.n_spins(), found: unitaries.len() });
        }
        let n = k.n_spins();
        let columns: Vec<(C64, C64)> = unitaries
            .iter()
            .zip(k.bits())
            .map(|(u, &bit)| (u[(0, bit as usize)], u[(1, bit as usize)]))
            .collect();
        let amplitudes = DVector::from_fn(1 << n, |b, _| {
            columns.iter().enumerate().fold(C64::new(1.0, 0.0), |acc, (i, &(up, down))| {
                acc * if (b >> i) & 1 == 0 { up } else { down }
            })
        });
        Ok(Self { n_spins: n, amplitudes })
    }

    /// A Haar-random state (normalized complex Gaussian vector).
    pub fn haar_random<R: Rng + ?Sized>(n_spins: usize, rng: &mut R) -> Result<Self> {
        let d = super::dimension(n_spins)?;
        let mut amplitudes = DVector::from_fn(d, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let norm = amplitudes.norm();
        amplitudes /= C64::new(norm, 0.0);
        Ok(Self { n_spins, amplitudes })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut DVector<C64> {
        &mut self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn apply_local(&mut self, site: usize, m: &Matrix2c) -> Result<()> {
        super::check_site(self.n_spins, site)?;
        apply_local_in_place(self.amplitudes.as_mut_slice(), site, m);
        Ok(())
    }

    /// `<psi|op|psi>` for a hermitian operator.
    pub fn expectation(&self, op: &DenseOperator) -> Result<f64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: op.dim(), found: self.dim() });
        }
        if !op.is_hermitian() {
            return Err(Error::NotHermitian(op.hermiticity_error()));
        }
        Ok(self.amplitudes.dotc(&(op.matrix() * &self.amplitudes)).re)
    }

    /// `<sigma^x_j>` for every site `j = 1..=N`, in site order.
    pub fn x_magnetizations(&self) -> Vec<f64> {
        let a = self.amplitudes.as_slice();
        (0..self.n_spins)
            .map(|i| {
                let mask = 1usize << i;
                (0..a.len()).map(|b| (a[b].conj() * a[b ^ mask]).re).sum()
            })
            .collect()
    }

    /// `<sigma^z_j>` for every site `j = 1..=N`.
    pub fn z_magnetizations(&self) -> Vec<f64> {
        let a = self.amplitudes.as_slice();
        (0..self.n_spins)
            .map(|i| {
                a.iter()
                    .enumerate()
                    .map(|(b, z)| if (b >> i) & 1 == 0 { z.norm_sqr() } else { -z.norm_sqr() })
                    .sum()
            })
            .collect()
    }
}

fn spins_for_len(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::invalid(format!("state length {len} is not 2^N with N >= 1")));
    }
    let n = len.trailing_zeros() as usize;
    super::dimension(n)?;
    Ok(n)
}

/// `<psi|op|psi>` for a hermitian operator.
pub fn expectation(psi: &StateVector, op: &DenseOperator) -> Result<f64> {
    psi.expectation(op)
}
