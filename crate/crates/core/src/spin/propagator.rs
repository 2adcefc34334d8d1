use nalgebra::{DMatrix, DVector};

use super::{build_hamiltonian_real, DenseOperator, HamiltonianSpec, StateVector, C64};
use crate::{Error, Result};

#[derive(Debug, Clone)]
enum EigenBasis {
    Real(DMatrix<f64>),
    Complex(DMatrix<C64>),
}

/// Spectral decomposition `H = U diag(lambda) U^dag`, computed once and
/// reused for `exp(-iHt)` at any `t`.
#[derive(Debug, Clone)]
pub struct Propagator {
    eigenvalues: DVector<f64>,
    basis: EigenBasis,
}

/// Diagonalizes a hermitian operator. Real symmetric input (the Ising
/// Hamiltonian) takes a real eigensolver path.
pub fn make_propagator(h: &DenseOperator) -> Result<Propagator> {
    if !h.is_hermitian() {
        return Err(Error::NotHermitian(h.hermiticity_error()));
    }
    if h.is_real() {
        return Ok(Propagator::from_real_symmetric(h.matrix().map(|z| z.re)));
    }
    let eig = h.matrix().clone().symmetric_eigen();
    Ok(Propagator { eigenvalues: eig.eigenvalues, basis: EigenBasis::Complex(eig.eigenvectors) })
}

impl Propagator {
    pub fn from_spec(spec: &HamiltonianSpec) -> Result<Self> {
        Ok(Self::from_real_symmetric(build_hamiltonian_real(spec)?))
    }

    /// `h` must be symmetric; only its lower triangle is read.
    pub fn from_real_symmetric(h: DMatrix<f64>) -> Self {
        let eig = h.symmetric_eigen();
        Self { eigenvalues: eig.eigenvalues, basis: EigenBasis::Real(eig.eigenvectors) }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub(crate) fn real_basis(&self) -> Option<&DMatrix<f64>> {
        match &self.basis {
            EigenBasis::Real(v) => Some(v),
            EigenBasis::Complex(_) => None,
        }
    }

    pub(crate) fn complex_basis(&self) -> DMatrix<C64> {
        match &self.basis {
            EigenBasis::Real(v) => v.map(|x| C64::new(x, 0.0)),
            EigenBasis::Complex(v) => v.clone(),
        }
    }

    /// `U diag(f(lambda)) U^dag`.
    fn spectral_map(&self, f: impl Fn(f64) -> C64) -> DMatrix<C64> {
        let u = self.complex_basis();
        let mut scaled = u.clone();
        for (mut col, &l) in scaled.column_iter_mut().zip(self.eigenvalues.iter()) {
            col *= f(l);
        }
        scaled * u.adjoint()
    }

    pub fn reconstruct(&self) -> DMatrix<C64> {
        self.spectral_map(|l| C64::new(l, 0.0))
    }

    /// The dense matrix `exp(-iHt)`.
    pub fn unitary(&self, t: f64) -> DMatrix<C64> {
        self.spectral_map(|l| C64::from_polar(1.0, -l * t))
    }

    pub fn evolve(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        let mut out = self.evolve_many(std::slice::from_ref(psi), &[t])?;
        Ok(out.remove(0).remove(0))
    }

    /// Evolves every state to every time; result is indexed `[state][time]`.
    /// The basis change is done with matrix-matrix products over all
    /// `(state, time)` columns at once. `t == 0` returns the input unchanged.
    pub fn evolve_many(&self, states: &[StateVector], times: &[f64]) -> Result<Vec<Vec<StateVector>>> {
        let d = self.dim();
        if let Some(bad) = states.iter().find(|s| s.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: bad.dim() });
        }
        let m = states.len();
        let mut out: Vec<Vec<Option<StateVector>>> = vec![vec![None; times.len()]; m];
        let moving: Vec<usize> = (0..times.len()).filter(|&i| times[i] != 0.0).collect();
        for (ti, &t) in times.iter().enumerate() {
            if t == 0.0 {
                for (s, psi) in states.iter().enumerate() {
                    out[s][ti] = Some(psi.clone());
                }
            }
        }
        if !moving.is_empty() && m > 0 {
            let evolved = match &self.basis {
                EigenBasis::Real(v) => self.evolve_real(v, states, &moving, times),
                EigenBasis::Complex(v) => self.evolve_complex(v, states, &moving, times),
            };
            for (col, amps) in evolved.into_iter().enumerate() {
                let (slot, s) = (col / m, col % m);
                out[s][moving[slot]] = Some(StateVector::from_unnormalized(amps));
            }
        }
        Ok(out
            .into_iter()
            .map(|row| row.into_iter().map(|s| s.expect("every cell filled")).collect())
            .collect())
    }

    // Columns of the result are ordered (time slot major, state minor).
    fn evolve_real(
        &self,
        v: &DMatrix<f64>,
        states: &[StateVector],
        moving: &[usize],
        times: &[f64],
    ) -> Vec<DVector<C64>> {
        let d = self.dim();
        let m = states.len();
        let psi = DMatrix::from_fn(d, 2 * m, |r, c| {
            let z = states[c / 2].amplitudes()[r];
            if c % 2 == 0 {
                z.re
            } else {
                z.im
            }
        });
        let coeff = v.tr_mul(&psi);
        let mut rotated = DMatrix::<f64>::zeros(d, 2 * m * moving.len());
        for (slot, &ti) in moving.iter().enumerate() {
            let t = times[ti];
            for r in 0..d {
                let (s, c) = (-self.eigenvalues[r] * t).sin_cos();
                // (cr + i ci)(c + i s)
                for k in 0..m {
                    let (cr, ci) = (coeff[(r, 2 * k)], coeff[(r, 2 * k + 1)]);
                    let col = 2 * (slot * m + k);
                    rotated[(r, col)] = cr * c - ci * s;
                    rotated[(r, col + 1)] = cr * s + ci * c;
                }
            }
        }
        let result = v * rotated;
        (0..m * moving.len())
            .map(|j| {
                DVector::from_fn(d, |r, _| C64::new(result[(r, 2 * j)], result[(r, 2 * j + 1)]))
            })
            .collect()
    }

    fn evolve_complex(
        &self,
        v: &DMatrix<C64>,
        states: &[StateVector],
        moving: &[usize],
        times: &[f64],
    ) -> Vec<DVector<C64>> {
        let d = self.dim();
        let m = states.len();
        let psi = DMatrix::from_fn(d, m, |r, c| states[c].amplitudes()[r]);
        let coeff = v.ad_mul(&psi);
        let mut rotated = DMatrix::<C64>::zeros(d, m * moving.len());
        for (slot, &ti) in moving.iter().enumerate() {
            for r in 0..d {
                let phase = C64::from_polar(1.0, -self.eigenvalues[r] * times[ti]);
                for k in 0..m {
                    rotated[(r, slot * m + k)] = coeff[(r, k)] * phase;
                }
            }
        }
        let result = v * rotated;
        result.column_iter().map(|c| c.into_owned()).collect()
    }
}
