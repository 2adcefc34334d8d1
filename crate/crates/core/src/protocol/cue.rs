use rand::Rng;
use rand_distr::StandardNormal;

use crate::spin::{Matrix2c, C64};

/// Haar-random 2x2 unitary: QR of a complex Ginibre matrix with the phases of
/// `R`'s diagonal moved into `Q`, so the result is CUE-distributed rather than
/// biased by the QR sign convention.
pub fn sample_cue_unitary<R: Rng + ?Sized>(rng: &mut R) -> Matrix2c {
    let mut gauss = || {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    };
    let z = Matrix2c::new(gauss(), gauss(), gauss(), gauss());
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for i in 0..2 {
        let d = r[(i, i)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for row in 0..2 {
            q[(row, i)] *= phase;
        }
    }
    q
}

/// One draw `u = u_1 (x) ... (x) u_N` of independent single-site CUE unitaries.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalUnitarySet {
    pub unitary_index: u64,
    pub unitaries: Vec<Matrix2c>,
}

impl LocalUnitarySet {
    pub fn sample<R: Rng + ?Sized>(n_spins: usize, unitary_index: u64, rng: &mut R) -> Self {
        Self { unitary_index, unitaries: (0..n_spins).map(|_| sample_cue_unitary(rng)).collect() }
    }

    pub fn identity(n_spins: usize) -> Self {
        Self { unitary_index: 0, unitaries: vec![Matrix2c::identity(); n_spins] }
    }

    pub fn n_spins(&self) -> usize {
        self.unitaries.len()
    }

    /// Largest `|u^dag u - 1|` entry over all sites.
    pub fn unitarity_error(&self) -> f64 {
        self.unitaries
            .iter()
            .flat_map(|u| (u.adjoint() * u - Matrix2c::identity()).iter().map(|z| z.norm()).collect::<Vec<_>>())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{pauli_matrix, Pauli};
    use rand::SeedableRng;

    #[test]
    fn draws_are_unitary() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            let u = sample_cue_unitary(&mut rng);
            assert!((u.adjoint() * u - Matrix2c::identity()).norm() < 1e-12);
        }
        assert!(LocalUnitarySet::sample(10, 3, &mut rng).unitarity_error() < 1e-12);
    }

    #[test]
    fn haar_first_and_second_moments() {
        // <0|u^dag sigma^z u|0> is uniform on [-1, 1] under Haar: mean 0, E[z^2] = 1/3
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let z = pauli_matrix(Pauli::Z);
        let n = 100_000;
        let (mut m1, mut m2) = (0.0, 0.0);
        for _ in 0..n {
            let u = sample_cue_unitary(&mut rng);
            let val = (u.adjoint() * z * u)[(0, 0)].re;
            m1 += val;
            m2 += val * val;
        }
        m1 /= n as f64;
        m2 /= n as f64;
        assert!(m1.abs() < 0.01, "mean {m1}");
        assert!((m2 - 1.0 / 3.0).abs() < 0.005, "second moment {m2}");
    }
}
