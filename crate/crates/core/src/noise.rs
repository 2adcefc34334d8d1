//! Shot-to-shot global dephasing: a spatially uniform random field made of a
//! white component and a periodic component, applied after the unitary
//! evolution as one collective z rotation per shot.
//!
//! Phase convention: the field `B_s` shifts the qubit transition frequency,
//! so it accumulates a relative (Ramsey) phase `Phi = int_0^t B_s dt'` between
//! `|0>` and `|1>`. On the spins this is `exp(-i (Phi/2) sum_i sigma^z_i)`,
//! i.e. a rotation angle `phi = Phi / 2` in [`apply_dephasing`]. With the
//! default white-noise level this convention puts the Ramsey 1/e time at
//! `2 / (white_std^2 dt)` = 35 ms.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::spin::{StateVector, C64};
use crate::{Error, Result};

/// Ratio between the `sigma^z` rotation angle and the transition phase.
pub const SPIN_ANGLE_PER_TRANSITION_PHASE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhasePolicy {
    /// Periodic-component phase drawn uniformly in `[0, 2 pi)` per shot.
    RandomPerShot,
    Fixed(f64),
}

/// Noise parameters in SI units: angular frequencies in rad/s, `dt` in s,
/// `periodic_frequency` in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub white_std: f64,
    pub dt: f64,
    pub periodic_amplitude: f64,
    pub periodic_frequency: f64,
    pub phase_policy: PhasePolicy,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            white_std: TAU * 120.0,
            dt: 1e-4,
            periodic_amplitude: TAU * 90.0,
            periodic_frequency: 204.0,
            phase_policy: PhasePolicy::RandomPerShot,
        }
    }
}

impl NoiseSpec {
    pub fn silent() -> Self {
        Self { white_std: 0.0, periodic_amplitude: 0.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.white_std >= 0.0
            && self.dt > 0.0
            && self.periodic_amplitude >= 0.0
            && self.periodic_frequency >= 0.0
            && [self.white_std, self.dt, self.periodic_amplitude, self.periodic_frequency]
                .iter()
                .all(|x| x.is_finite());
        if !ok {
            return Err(Error::invalid(format!("invalid noise parameters {self:?}")));
        }
        Ok(())
    }

    /// Draws one realization of the field up to `horizon` seconds.
    pub fn trajectory<R: Rng + ?Sized>(&self, horizon: f64, rng: &mut R) -> NoiseTrajectory {
        let theta = match self.phase_policy {
            PhasePolicy::RandomPerShot => rng.random::<f64>() * TAU,
            PhasePolicy::Fixed(theta) => theta,
        };
        let (steps, rest) = self.split(horizon);
        let n = steps + usize::from(rest > 0.0);
        let white = if self.white_std > 0.0 {
            (0..n).map(|_| self.white_std * rng.sample::<f64, _>(StandardNormal)).collect()
        } else {
            vec![0.0; n]
        };
        NoiseTrajectory { spec: *self, theta, white }
    }

    /// Whole steps and the final partial step of a duration. Durations within
    /// 1e-9 relative of a whole number of steps count as whole.
    fn split(&self, t: f64) -> (usize, f64) {
        let ratio = t / self.dt;
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            (nearest as usize, 0.0)
        } else {
            let whole = ratio.floor();
            (whole as usize, t - whole * self.dt)
        }
    }

    fn periodic_phase(&self, t: f64, theta: f64) -> f64 {
        let a = self.periodic_amplitude;
        if a == 0.0 {
            return 0.0;
        }
        let w = TAU * self.periodic_frequency;
        if w == 0.0 {
            a * theta.sin() * t
        } else {
            a / w * (theta.cos() - (w * t + theta).cos())
        }
    }
}

/// One sampled field history: the periodic phase offset and the white-noise
/// field for each step of length `dt`.
#[derive(Debug, Clone)]
pub struct NoiseTrajectory {
    spec: NoiseSpec,
    theta: f64,
    white: Vec<f64>,
}

impl NoiseTrajectory {
    /// Transition phase `int_0^t B_s dt'`. `t` must not exceed the horizon.
    pub fn phase_at(&self, t: f64) -> f64 {
        let (steps, rest) = self.spec.split(t);
        let dt = self.spec.dt;
        let mut phi: f64 = self.white[..steps].iter().sum::<f64>() * dt;
        if rest > 0.0 {
            phi += self.white[steps] * rest;
        }
        phi + self.spec.periodic_phase(t, self.theta)
    }
}

/// Accumulated transition phase after `t` seconds for one fresh realization.
pub fn sample_phase<R: Rng + ?Sized>(spec: &NoiseSpec, t: f64, rng: &mut R) -> f64 {
    spec.trajectory(t, rng).phase_at(t)
}

/// `exp(-i phi sum_i sigma^z_i) |psi>`. Diagonal, `O(2^N)`.
pub fn apply_dephasing(psi: &StateVector, phi: f64) -> StateVector {
    let mut out = psi.clone();
    dephase_in_place(out.amplitudes_mut().as_mut_slice(), psi.n_spins(), phi);
    out
}

pub(crate) fn dephase_in_place(amps: &mut [C64], n_spins: usize, phi: f64) {
    if phi == 0.0 {
        return;
    }
    // sum_i sigma^z_i = n - 2 * popcount(b)
    let table: Vec<C64> = (0..=n_spins)
        .map(|ones| C64::from_polar(1.0, -phi * (n_spins as f64 - 2.0 * ones as f64)))
        .collect();
    for (b, a) in amps.iter_mut().enumerate() {
        *a *= table[b.count_ones() as usize];
    }
}

/// Single-qubit Ramsey contrast `|<exp(i Phi(t))>|` over `n_samples` field
/// realizations. Each realization is drawn once and evaluated at every wait
/// time, so the curve is smooth in `t` for a fixed stream.
pub fn ramsey_contrast<R: Rng + ?Sized>(
    spec: &NoiseSpec,
    wait_times: &[f64],
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if n_samples < 100 {
        return Err(Error::invalid(format!("n_samples must be >= 100, got {n_samples}")));
    }
    spec.validate()?;
    if wait_times.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
        return Err(Error::invalid("wait times must be finite and >= 0"));
    }
    let horizon = wait_times.iter().copied().fold(0.0, f64::max);
    let mut sums = vec![C64::new(0.0, 0.0); wait_times.len()];
    for _ in 0..n_samples {
        let traj = spec.trajectory(horizon, rng);
        for (acc, &t) in sums.iter_mut().zip(wait_times) {
            let relative = 2.0 * SPIN_ANGLE_PER_TRANSITION_PHASE * traj.phase_at(t);
            *acc += C64::from_polar(1.0, relative);
        }
    }
    Ok(sums.into_iter().map(|s| s.norm() / n_samples as f64).collect())
}

/// A sampled Ramsey curve with helpers for locating revivals and the decay.
#[derive(Debug, Clone, Serialize)]
pub struct RamseyCurve {
    pub times: Vec<f64>,
    pub contrast: Vec<f64>,
}

impl RamseyCurve {
    /// Interior points strictly larger than both neighbours.
    pub fn local_maxima(&self) -> Vec<f64> {
        self.contrast
            .windows(3)
            .enumerate()
            .filter(|(_, w)| w[1] > w[0] && w[1] > w[2])
            .map(|(i, _)| self.times[i + 1])
            .collect()
    }

    /// First time the contrast falls below `level`, linearly interpolated.
    pub fn first_crossing(&self, level: f64) -> Option<f64> {
        let c = &self.contrast;
        (1..c.len()).find(|&i| c[i - 1] >= level && c[i] < level).map(|i| {
            let (t0, t1) = (self.times[i - 1], self.times[i]);
            t0 + (t1 - t0) * (c[i - 1] - level) / (c[i - 1] - c[i])
        })
    }
}

/// Ramsey 1/e time of the white component alone, `2 / (white_std^2 dt)`.
pub fn white_coherence_time(spec: &NoiseSpec) -> f64 {
    let k = 2.0 * SPIN_ANGLE_PER_TRANSITION_PHASE;
    2.0 / (k * k * spec.white_std.powi(2) * spec.dt)
}

/// Purity `Tr[rho_A^2]` of the trajectory-averaged state
/// `rho = E[D(phi) |psi><psi| D(phi)^dag]` at time `t`, reduced to
/// `partition`, from `n_samples` noise realizations.
pub fn dephased_purity<R: Rng + ?Sized>(
    psi: &StateVector,
    spec: Option<&NoiseSpec>,
    t: f64,
    partition: &[usize],
    n_samples: usize,
    rng: &mut R,
) -> Result<f64> {
    let n = psi.n_spins();
    let mut in_a = vec![false; n];
    for &s in partition {
        crate::spin::check_site(n, s)?;
        if std::mem::replace(&mut in_a[s - 1], true) {
            return Err(Error::invalid(format!("site {s} repeated in partition")));
        }
    }
    if partition.is_empty() || n_samples == 0 {
        return Err(Error::invalid("need a non-empty partition and at least one sample"));
    }
    let k = if spec.is_some() { n_samples } else { 1 };
    let (dim_a, dim_b) = (1usize << partition.len(), 1usize << (n - partition.len()));
    let split = |b: usize| {
        let (mut a, mut c, mut ia, mut ic) = (0, 0, 0, 0);
        for site in 0..n {
            let bit = (b >> site) & 1;
            if in_a[site] {
                a |= bit << ia;
                ia += 1;
            } else {
                c |= bit << ic;
                ic += 1;
            }
        }
        (a, c)
    };
    // columns of x: (trajectory, complement index); rho_A = x x^dag / k
    let mut x = DMatrix::<C64>::zeros(dim_a, k * dim_b);
    let mut amps: Vec<C64> = Vec::with_capacity(psi.dim());
    for traj in 0..k {
        amps.clear();
        amps.extend(psi.amplitudes().iter());
        if let Some(spec) = spec {
            let phase = sample_phase(spec, t, rng);
            dephase_in_place(&mut amps, n, SPIN_ANGLE_PER_TRANSITION_PHASE * phase);
        }
        for (b, amp) in amps.iter().enumerate() {
            let (a, c) = split(b);
            x[(a, traj * dim_b + c)] = *amp;
        }
    }
    let gram = if dim_a <= k * dim_b { &x * x.adjoint() } else { x.adjoint() * &x };
    Ok(gram.iter().map(|z| z.norm_sqr()).sum::<f64>() / (k * k) as f64)
}
