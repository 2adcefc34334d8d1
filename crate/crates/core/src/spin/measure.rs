use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{StateVector, C64};
use crate::{Error, Result};

/// Global readout basis. In `X` every spin is rotated into its `sigma^x`
/// eigenbasis before a z readout; all `sigma^x_j` commute, so one shot yields
/// every site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementBasis {
    Z,
    X,
}

/// Bitstrings from repeated projective measurements. Bit `i - 1` of an
/// outcome is the result on site `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotRecord {
    pub n_spins: usize,
    pub basis: MeasurementBasis,
    pub outcomes: Vec<u64>,
}

impl ShotRecord {
    pub fn n_shots(&self) -> usize {
        self.outcomes.len()
    }

    /// `(N_plus - N_minus) / n_shots` for one site (1-based).
    pub fn mean_spin(&self, site: usize) -> f64 {
        let mask = 1u64 << (site - 1);
        let minus = self.outcomes.iter().filter(|&&o| o & mask != 0).count() as i64;
        let plus = self.outcomes.len() as i64 - minus;
        (plus - minus) as f64 / self.outcomes.len() as f64
    }

    pub fn mean_spins(&self) -> Vec<f64> {
        (1..=self.n_spins).map(|s| self.mean_spin(s)).collect()
    }
}

/// In-place normalized Walsh-Hadamard transform: Hadamard on every site.
pub fn walsh_hadamard(amps: &mut [C64]) {
    let d = amps.len();
    let mut h = 1;
    while h < d {
        for block in (0..d).step_by(2 * h) {
            for b in block..block + h {
                let (a0, a1) = (amps[b], amps[b + h]);
                amps[b] = (a0 + a1) * FRAC_1_SQRT_2;
                amps[b + h] = (a0 - a1) * FRAC_1_SQRT_2;
            }
        }
        h *= 2;
    }
}

/// Outcome probabilities in the requested basis.
pub fn born_probabilities(psi: &StateVector, basis: MeasurementBasis) -> Vec<f64> {
    match basis {
        MeasurementBasis::Z => psi.amplitudes().iter().map(|z| z.norm_sqr()).collect(),
        MeasurementBasis::X => {
            let mut amps: Vec<C64> = psi.amplitudes().iter().copied().collect();
            walsh_hadamard(&mut amps);
            amps.iter().map(|z| z.norm_sqr()).collect()
        }
    }
}

/// Draws one index from unnormalized weights by a linear scan.
pub fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
    }
    // round-off: land on the last outcome with nonzero weight
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Draws `n` outcomes from a probability vector via its cumulative
/// distribution.
pub(crate) fn sample_many<R: Rng + ?Sized>(probs: &[f64], n: usize, rng: &mut R) -> Vec<u64> {
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &p in probs {
        acc += p;
        cdf.push(acc);
    }
    let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    (0..n)
        .map(|_| {
            let target = rng.random::<f64>() * acc;
            cdf.partition_point(|&c| c <= target).min(last) as u64
        })
        .collect()
}

/// `n_shots` independent Born-rule samples of `psi` in a global basis.
pub fn sample_measurement<R: Rng + ?Sized>(
    psi: &StateVector,
    basis: MeasurementBasis,
    n_shots: usize,
    rng: &mut R,
) -> Result<ShotRecord> {
    if n_shots == 0 {
        return Err(Error::invalid("n_shots must be positive"));
    }
    let probs = born_probabilities(psi, basis);
    Ok(ShotRecord { n_spins: psi.n_spins(), basis, outcomes: sample_many(&probs, n_shots, rng) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::SpinBasisState;
    use nalgebra::DVector;
    use rand::SeedableRng;

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn zero_state_always_reads_zero() {
        let psi = StateVector::basis(&SpinBasisState::zeros(4));
        let rec = sample_measurement(&psi, MeasurementBasis::Z, 500, &mut rng(1)).unwrap();
        assert!(rec.outcomes.iter().all(|&o| o == 0));
        assert_eq!(rec.mean_spins(), vec![1.0; 4]);
    }

    #[test]
    fn plus_state_is_fair_coin_in_z() {
        let h = FRAC_1_SQRT_2;
        let psi = StateVector::new(DVector::from_vec(vec![C64::new(h, 0.0), C64::new(h, 0.0)])).unwrap();
        let n = 100_000;
        let rec = sample_measurement(&psi, MeasurementBasis::Z, n, &mut rng(2)).unwrap();
        let zeros = rec.outcomes.iter().filter(|&&o| o == 0).count() as f64 / n as f64;
        assert!((zeros - 0.5).abs() < 0.005, "fraction {zeros}");
        // and deterministic |+> in x
        let rec = sample_measurement(&psi, MeasurementBasis::X, 100, &mut rng(2)).unwrap();
        assert!(rec.outcomes.iter().all(|&o| o == 0));
    }

    #[test]
    fn x_readout_matches_exact_born_distribution() {
        let psi = StateVector::haar_random(3, &mut rng(3)).unwrap();
        // exact x-basis probabilities by explicit projection onto |s_1 s_2 s_3>_x
        let exact: Vec<f64> = (0..8)
            .map(|x: usize| {
                let amp: C64 = (0..8usize)
                    .map(|b| {
                        let sign = if (x & b).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
                        psi.amplitudes()[b] * (sign / 8f64.sqrt())
                    })
                    .sum();
                amp.norm_sqr()
            })
            .collect();
        let n = 10_000;
        let rec = sample_measurement(&psi, MeasurementBasis::X, n, &mut rng(4)).unwrap();
        let mut counts = [0usize; 8];
        for &o in &rec.outcomes {
            counts[o as usize] += 1;
        }
        let chi2: f64 = (0..8)
            .filter(|&x| exact[x] > 0.0)
            .map(|x| {
                let e = exact[x] * n as f64;
                (counts[x] as f64 - e).powi(2) / e
            })
            .sum();
        // 7 degrees of freedom, p = 0.001
        assert!(chi2 < 24.32, "chi2 = {chi2}");
        for (site, m) in psi.x_magnetizations().iter().enumerate() {
            assert!((rec.mean_spin(site + 1) - m).abs() < 0.04);
        }
    }

    #[test]
    fn zero_shots_rejected() {
        let psi = StateVector::basis(&SpinBasisState::zeros(1));
        assert!(sample_measurement(&psi, MeasurementBasis::Z, 0, &mut rng(0)).is_err());
    }

    #[test]
    fn sample_index_respects_zero_weights() {
        let mut r = rng(9);
        for _ in 0..1000 {
            let i = sample_index(&[0.0, 0.3, 0.0, 0.7, 0.0], &mut r);
            assert!(i == 1 || i == 3);
        }
    }
}
