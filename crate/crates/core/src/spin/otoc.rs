use nalgebra::DMatrix;

use super::{check_site, DenseOperator, HamiltonianSpec, Propagator, C64};
use crate::{Error, Result};

enum Frame {
    Real { u: DMatrix<f64>, v: DMatrix<f64> },
    Complex { u: DMatrix<C64>, v: DMatrix<C64> },
}

/// Infinite-temperature OTOC `D^-1 Tr[W(t) V W(t) V]` with `W = sigma^x_j`,
/// evaluated in the eigenbasis of `H`, where `W(t)` is `W` with its matrix
/// elements dressed by `exp(i(lambda_a - lambda_b)t)`.
pub struct OtocOracle<'a> {
    prop: &'a Propagator,
    n_spins: usize,
    frame: Frame,
}

impl<'a> OtocOracle<'a> {
    pub fn new(prop: &'a Propagator, v_op: &DenseOperator) -> Result<Self> {
        if v_op.dim() != prop.dim() {
            return Err(Error::DimensionMismatch { expected: prop.dim(), found: v_op.dim() });
        }
        if !v_op.is_hermitian() {
            return Err(Error::NotHermitian(v_op.hermiticity_error()));
        }
        let n_spins = prop.dim().trailing_zeros() as usize;
        let frame = match prop.real_basis() {
            Some(u) if v_op.is_real() => {
                let v = v_op.matrix().map(|z| z.re);
                Frame::Real { v: u.tr_mul(&(v * u)), u: u.clone() }
            }
            _ => {
                let u = prop.complex_basis();
                Frame::Complex { v: u.ad_mul(&(v_op.matrix() * &u)), u }
            }
        };
        Ok(Self { prop, n_spins, frame })
    }

    pub fn otoc(&self, w_site: usize, t: f64) -> Result<f64> {
        Ok(self.series(w_site, &[t])?[0])
    }

    pub fn series(&self, w_site: usize, times: &[f64]) -> Result<Vec<f64>> {
        check_site(self.n_spins, w_site)?;
        let mask = 1usize << (w_site - 1);
        let d = self.prop.dim();
        let lambda = self.prop.eigenvalues();
        let out = match &self.frame {
            Frame::Real { u, v } => {
                // sigma^x permutes rows: (W U)[b, :] = U[b ^ mask, :]
                let wu = DMatrix::from_fn(d, d, |r, c| u[(r ^ mask, c)]);
                let w = u.tr_mul(&wu);
                times
                    .iter()
                    .map(|&t| {
                        let (s, c): (Vec<f64>, Vec<f64>) =
                            lambda.iter().map(|l| (l * t).sin_cos()).unzip();
                        let re = DMatrix::from_fn(d, d, |a, b| w[(a, b)] * (c[a] * c[b] + s[a] * s[b]));
                        let im = DMatrix::from_fn(d, d, |a, b| w[(a, b)] * (s[a] * c[b] - c[a] * s[b]));
                        let yr = re * v;
                        let yi = im * v;
                        let mut tr = 0.0;
                        for a in 0..d {
                            for b in 0..d {
                                tr += yr[(a, b)] * yr[(b, a)] - yi[(a, b)] * yi[(b, a)];
                            }
                        }
                        tr / d as f64
                    })
                    .collect()
            }
            Frame::Complex { u, v } => {
                let wu = DMatrix::from_fn(d, d, |r, c| u[(r ^ mask, c)]);
                let w = u.ad_mul(&wu);
                times
                    .iter()
                    .map(|&t| {
                        let ph: Vec<C64> = lambda.iter().map(|l| C64::from_polar(1.0, l * t)).collect();
                        let x = DMatrix::from_fn(d, d, |a, b| w[(a, b)] * ph[a] * ph[b].conj());
                        let y = x * v;
                        let mut tr = C64::new(0.0, 0.0);
                        for a in 0..d {
                            for b in 0..d {
                                tr += y[(a, b)] * y[(b, a)];
                            }
                        }
                        tr.re / d as f64
                    })
                    .collect()
            }
        };
        Ok(out)
    }
}

/// One-shot exact OTOC. Diagonalizes `H`; use [`OtocOracle`] for series.
pub fn exact_otoc(spec: &HamiltonianSpec, w_site: usize, v_op: &DenseOperator, t: f64) -> Result<f64> {
    let prop = Propagator::from_spec(spec)?;
    OtocOracle::new(&prop, v_op)?.otoc(w_site, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{build_hamiltonian, make_propagator, Pauli, SpinBasisState, StateVector};

    fn spec(n: usize) -> HamiltonianSpec {
        HamiltonianSpec::from_hz(n, 30.13, 1.21, 1500.0).unwrap()
    }

    #[test]
    fn t_zero_anchors() {
        let s = spec(5);
        let v = DenseOperator::pauli(5, 1, Pauli::Z).unwrap();
        assert!((exact_otoc(&s, 5, &v, 0.0).unwrap() - 1.0).abs() < 1e-10);
        assert!((exact_otoc(&s, 1, &v, 0.0).unwrap() + 1.0).abs() < 1e-10);
    }

    /// Trace computed by evolving every basis state: sum_b <b|W(t) V W(t) V|b>
    /// with `W(t)|phi> = U^dag W U |phi>`.
    fn otoc_by_states(s: &HamiltonianSpec, w_site: usize, v: &DenseOperator, t: f64) -> f64 {
        let n = s.n_spins;
        let prop = make_propagator(&build_hamiltonian(s).unwrap()).unwrap();
        let w = DenseOperator::pauli(n, w_site, Pauli::X).unwrap();
        let wt = |phi: &StateVector| {
            let a = prop.evolve(phi, t).unwrap();
            let b = w.apply(&a).unwrap();
            prop.evolve(&b, -t).unwrap()
        };
        let mut tr = C64::new(0.0, 0.0);
        for idx in 0..1 << n {
            let b = StateVector::basis(&SpinBasisState::from_index(n, idx));
            let phi = wt(&v.apply(&b).unwrap());
            let phi = wt(&v.apply(&phi).unwrap());
            tr += b.amplitudes().dotc(phi.amplitudes());
        }
        tr.re / (1 << n) as f64
    }

    #[test]
    fn heisenberg_trace_matches_state_route() {
        let s = spec(4);
        let prop = Propagator::from_spec(&s).unwrap();
        let vz = DenseOperator::pauli(4, 1, Pauli::Z).unwrap();
        let oracle = OtocOracle::new(&prop, &vz).unwrap();
        for &t in &[0.0, 1.3e-3, 3.7e-3] {
            for site in 1..=4 {
                let a = oracle.otoc(site, t).unwrap();
                let b = otoc_by_states(&s, site, &vz, t);
                assert!((a - b).abs() < 1e-8, "site {site} t {t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn complex_frame_agrees_with_real_frame() {
        let s = spec(3);
        let prop = Propagator::from_spec(&s).unwrap();
        let vy = DenseOperator::pauli(3, 2, Pauli::Y).unwrap();
        let oracle = OtocOracle::new(&prop, &vy).unwrap();
        for &t in &[0.0, 2.1e-3] {
            for site in 1..=3 {
                let a = oracle.otoc(site, t).unwrap();
                let b = otoc_by_states(&s, site, &vy, t);
                assert!((a - b).abs() < 1e-8);
            }
        }
    }
}
