use rand::Rng;
use serde::{Deserialize, Serialize};

use super::LocalUnitarySet;
use crate::noise::{dephase_in_place, sample_phase, NoiseSpec, SPIN_ANGLE_PER_TRANSITION_PHASE};
use crate::spin::{
    sample_index, walsh_hadamard, LocalOperator, MeasurementBasis, Propagator, ShotRecord,
    SpinBasisState, StateVector, C64,
};
use crate::{Error, Result};

/// Which half of the protocol a measurement belongs to: `<W(t)>_{u,k}` or
/// `<V W(t) V>_{u,k_0}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plain,
    VApplied,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Plain => "plain",
            Branch::VApplied => "v_applied",
        }
    }
}

/// How `<sigma^x_j>` is obtained from the final state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Readout {
    /// Infinite-shot limit: exact expectation values.
    Exact,
    /// Finite number of projective x-basis shots.
    Shots(u32),
}

impl Readout {
    pub fn shots(self) -> Option<u32> {
        match self {
            Readout::Exact => None,
            Readout::Shots(n) => Some(n),
        }
    }
}

/// `V u |k>` (or `u |k>` without `V`), the state right before the quench.
pub fn prepare_state(
    u: &LocalUnitarySet,
    k: &SpinBasisState,
    v: Option<&LocalOperator>,
) -> Result<StateVector> {
    let mut psi = StateVector::rotated_product(k, &u.unitaries)?;
    if let Some(v) = v {
        v.apply_in_place(&mut psi)?;
    }
    Ok(psi)
}

/// Global x-basis readout of an evolved state. With noise each shot gets its
/// own collective dephasing before the readout. Returns `<sigma^x_j>` for
/// every site, all estimated from the same shots.
pub fn readout_x<R: Rng + ?Sized>(
    psi: &StateVector,
    t: f64,
    readout: Readout,
    noise: Option<&NoiseSpec>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let n_shots = match readout {
        Readout::Exact => {
            if noise.is_some() {
                return Err(Error::invalid("exact-expectation readout does not support noise"));
            }
            return Ok(psi.x_magnetizations());
        }
        Readout::Shots(0) => return Err(Error::invalid("n_shots must be positive")),
        Readout::Shots(n) => n as usize,
    };
    let n = psi.n_spins();
    let outcomes = match noise {
        None => {
            let probs = crate::spin::born_probabilities(psi, MeasurementBasis::X);
            crate::spin::sample_many(&probs, n_shots, rng)
        }
        Some(spec) => {
            let mut amps: Vec<C64> = Vec::with_capacity(psi.dim());
            let mut probs = vec![0.0; psi.dim()];
            (0..n_shots)
                .map(|_| {
                    let phase = sample_phase(spec, t, rng);
                    amps.clear();
                    amps.extend(psi.amplitudes().iter());
                    dephase_in_place(&mut amps, n, SPIN_ANGLE_PER_TRANSITION_PHASE * phase);
                    walsh_hadamard(&mut amps);
                    for (p, a) in probs.iter_mut().zip(&amps) {
                        *p = a.norm_sqr();
                    }
                    sample_index(&probs, rng) as u64
                })
                .collect()
        }
    };
    Ok(ShotRecord { n_spins: n, basis: MeasurementBasis::X, outcomes }.mean_spins())
}

/// One protocol branch: prepare `|k>`, rotate by `u`, optionally apply `V`,
/// evolve for `t`, then read out `sigma^x` on every site.
#[allow(clippy::too_many_arguments)]
pub fn run_branch<R: Rng + ?Sized>(
    prop: &Propagator,
    u: &LocalUnitarySet,
    k: &SpinBasisState,
    v: Option<&LocalOperator>,
    t: f64,
    readout: Readout,
    noise: Option<&NoiseSpec>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if v.is_some() && k.bits().iter().any(|&b| b != 0) {
        return Err(Error::invalid("V is only applied in the k_0 branch"));
    }
    if prop.dim() != 1 << k.n_spins() {
        return Err(Error::DimensionMismatch { expected: prop.dim(), found: 1 << k.n_spins() });
    }
    let psi = prepare_state(u, k, v)?;
    let evolved = prop.evolve(&psi, t)?;
    readout_x(&evolved, t, readout, noise, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{HamiltonianSpec, Pauli};
    use rand::SeedableRng;

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    }

    fn prop(n: usize) -> Propagator {
        Propagator::from_spec(&HamiltonianSpec::from_hz(n, 30.13, 1.21, 1500.0).unwrap()).unwrap()
    }

    #[test]
    fn identity_unitaries_have_no_x_magnetization() {
        let p = prop(3);
        let u = LocalUnitarySet::identity(3);
        let k = SpinBasisState::zeros(3);
        let n = 4000;
        let est = run_branch(&p, &u, &k, None, 0.0, Readout::Shots(n), None, &mut rng(1)).unwrap();
        for m in est {
            // 4 sigma of a fair +-1 coin
            assert!(m.abs() < 4.0 / (n as f64).sqrt());
        }
    }

    #[test]
    fn v_branch_only_touches_its_site_at_t_zero() {
        let p = prop(4);
        let u = LocalUnitarySet::sample(4, 0, &mut rng(2));
        let k = SpinBasisState::zeros(4);
        let v = LocalOperator::pauli(1, Pauli::Z);
        let plain = run_branch(&p, &u, &k, None, 0.0, Readout::Exact, None, &mut rng(0)).unwrap();
        let with_v = run_branch(&p, &u, &k, Some(&v), 0.0, Readout::Exact, None, &mut rng(0)).unwrap();
        assert!((plain[0] + with_v[0]).abs() < 1e-12);
        for j in 1..4 {
            assert!((plain[j] - with_v[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_mode_matches_direct_contraction() {
        let p = prop(4);
        let u = LocalUnitarySet::sample(4, 0, &mut rng(3));
        let k = SpinBasisState::from_index(4, 0b0110);
        let t = 1.7e-3;
        let est = run_branch(&p, &u, &k, None, t, Readout::Exact, None, &mut rng(0)).unwrap();
        let psi = p.evolve(&prepare_state(&u, &k, None).unwrap(), t).unwrap();
        for (j, e) in est.iter().enumerate() {
            let op = crate::spin::DenseOperator::pauli(4, j + 1, Pauli::X).unwrap();
            assert!((e - psi.expectation(&op).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn shot_estimates_lie_on_the_binomial_lattice() {
        let p = prop(3);
        let u = LocalUnitarySet::sample(3, 0, &mut rng(4));
        let k = SpinBasisState::zeros(3);
        let n = 150;
        let noise = NoiseSpec::default();
        for noise in [None, Some(&noise)] {
            let est = run_branch(&p, &u, &k, None, 2e-3, Readout::Shots(n), noise, &mut rng(5)).unwrap();
            for m in est {
                let plus = (m + 1.0) * n as f64 / 2.0;
                assert!((plus - plus.round()).abs() < 1e-9 && (-1.0..=1.0).contains(&m));
            }
        }
    }

    #[test]
    fn rejects_v_outside_reference_state() {
        let p = prop(2);
        let u = LocalUnitarySet::identity(2);
        let k = SpinBasisState::from_index(2, 1);
        let v = LocalOperator::pauli(1, Pauli::Z);
        assert!(run_branch(&p, &u, &k, Some(&v), 0.0, Readout::Exact, None, &mut rng(0)).is_err());
        let k0 = SpinBasisState::zeros(2);
        let noise = NoiseSpec::default();
        assert!(run_branch(&p, &u, &k0, None, 0.0, Readout::Exact, Some(&noise), &mut rng(0)).is_err());
    }
}
