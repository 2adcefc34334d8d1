use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{apply_local_in_place, check_site, dimension, Matrix2c, StateVector, C64};
use crate::{Error, Result};

pub(crate) const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pauli {
    X,
    Y,
    Z,
}

pub fn pauli_matrix(p: Pauli) -> Matrix2c {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    match p {
        Pauli::X => Matrix2c::new(o, l, l, o),
        Pauli::Y => Matrix2c::new(o, -i, i, o),
        Pauli::Z => Matrix2c::new(l, o, o, -l),
    }
}

/// A full `2^N x 2^N` operator.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    matrix: DMatrix<C64>,
    hermitian: bool,
}

impl DenseOperator {
    /// Wraps a square matrix; the hermitian flag is computed, not trusted.
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::invalid("operator matrix must be square"));
        }
        let hermitian = hermiticity_error(&matrix) <= HERMITIAN_TOL;
        Ok(Self { matrix, hermitian })
    }

    pub fn identity(n_spins: usize) -> Result<Self> {
        let d = dimension(n_spins)?;
        Ok(Self { matrix: DMatrix::identity(d, d), hermitian: true })
    }

    /// `p` acting on `site` (1-based), identity elsewhere.
    pub fn pauli(n_spins: usize, site: usize, p: Pauli) -> Result<Self> {
        Self::local(n_spins, site, &pauli_matrix(p))
    }

    /// Embeds a single-site matrix into the full space.
    pub fn local(n_spins: usize, site: usize, m: &Matrix2c) -> Result<Self> {
        let d = dimension(n_spins)?;
        check_site(n_spins, site)?;
        let mask = 1usize << (site - 1);
        let mut matrix = DMatrix::zeros(d, d);
        for col in 0..d {
            let cb = (col & mask != 0) as usize;
            for rb in 0..2 {
                let row = if rb == 1 { col | mask } else { col & !mask };
                matrix[(row, col)] = m[(rb, cb)];
            }
        }
        Self::new(matrix)
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.matrix)
    }

    /// True when every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.matrix.iter().all(|z| z.im == 0.0)
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: psi.dim() });
        }
        Ok(StateVector::from_unnormalized(&self.matrix * psi.amplitudes()))
    }

    pub fn mul(&self, other: &DenseOperator) -> Result<DenseOperator> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Self::new(&self.matrix * &other.matrix)
    }
}

fn hermiticity_error(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// A single-site operator kept in 2x2 form, as used by the protocol for `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOperator {
    pub site: usize,
    pub matrix: Matrix2c,
}

impl LocalOperator {
    pub fn pauli(site: usize, p: Pauli) -> Self {
        Self { site, matrix: pauli_matrix(p) }
    }

    pub fn apply_in_place(&self, psi: &mut StateVector) -> Result<()> {
        check_site(psi.n_spins(), self.site)?;
        apply_local_in_place(psi.amplitudes_mut().as_mut_slice(), self.site, &self.matrix);
        Ok(())
    }

    pub fn to_dense(&self, n_spins: usize) -> Result<DenseOperator> {
        DenseOperator::local(n_spins, self.site, &self.matrix)
    }

    /// Whether the 2x2 block is a hermitian unitary (an involution).
    pub fn is_hermitian_unitary(&self) -> bool {
        let m = &self.matrix;
        (m - m.adjoint()).norm() <= HERMITIAN_TOL
            && (m * m - Matrix2c::identity()).norm() <= HERMITIAN_TOL
    }
}
