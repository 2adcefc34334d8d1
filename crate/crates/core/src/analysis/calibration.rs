//! Fitting `(J0, alpha)` to single-flip quench dynamics.
//!
//! The chain starts with every spin down except one flipped up, evolves under
//! the full Ising Hamiltonian, and `<sigma^z_j(t)>` is recorded for every
//! site. Observations are read from CSV:
//!
//! ```text
//! t_s,sz_1,sz_2,...,sz_N
//! 0,-1,-1,-1,-1,1,-1,-1,-1,-1,-1
//! ```

use nalgebra::{DMatrix, Matrix2};
use serde::Serialize;

use super::optimize::{nelder_mead, NelderMeadOptions};
use crate::spin::{HamiltonianSpec, Propagator, SpinBasisState, StateVector};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuenchData {
    pub times: Vec<f64>,
    /// `magnetization[time][site - 1]`.
    pub magnetization: Vec<Vec<f64>>,
}

impl QuenchData {
    pub fn new(times: Vec<f64>, magnetization: Vec<Vec<f64>>) -> Result<Self> {
        if times.is_empty() || times.len() != magnetization.len() {
            return Err(Error::invalid("need one magnetization row per time"));
        }
        if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("times must be finite, >= 0 and strictly increasing"));
        }
        let n = magnetization[0].len();
        crate::spin::dimension(n)?;
        for row in &magnetization {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: row.len() });
            }
            // measured values may overshoot +-1 after readout corrections
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("magnetization must be finite"));
            }
        }
        Ok(Self { times, magnetization })
    }

    pub fn n_spins(&self) -> usize {
        self.magnetization[0].len()
    }

    pub fn n_observations(&self) -> usize {
        self.times.len() * self.n_spins()
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header = reader.headers().map_err(Error::parse)?.clone();
        let n = header.len().saturating_sub(1);
        let expected: Vec<String> =
            std::iter::once("t_s".to_string()).chain((1..=n).map(|j| format!("sz_{j}"))).collect();
        if n == 0 || header.iter().ne(expected.iter().map(String::as_str)) {
            return Err(Error::parse("header must be t_s,sz_1,...,sz_N"));
        }
        crate::spin::dimension(n)?;
        let mut times = Vec::new();
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(Error::parse)?;
            let vals = rec
                .iter()
                .map(|f| f.trim().parse::<f64>().map_err(|_| Error::parse(format!("bad number {f:?}"))))
                .collect::<Result<Vec<f64>>>()?;
            if vals.len() != n + 1 {
                return Err(Error::parse("row length differs from header"));
            }
            times.push(vals[0]);
            rows.push(vals[1..].to_vec());
        }
        Self::new(times, rows)
    }

    pub fn to_csv_string(&self) -> String {
        let n = self.n_spins();
        let mut out = String::from("t_s");
        for j in 1..=n {
            out.push_str(&format!(",sz_{j}"));
        }
        out.push('\n');
        for (t, row) in self.times.iter().zip(&self.magnetization) {
            out.push_str(&t.to_string());
            for v in row {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// `<sigma^z_j(t)>` after flipping `flipped_site` up in an otherwise
/// spin-down chain.
pub fn simulate_quench(spec: &HamiltonianSpec, flipped_site: usize, times: &[f64]) -> Result<QuenchData> {
    let n = spec.n_spins;
    crate::spin::check_site(n, flipped_site)?;
    let bits: Vec<u8> = (1..=n).map(|j| u8::from(j != flipped_site)).collect();
    let psi = StateVector::basis(&SpinBasisState::new(bits)?);
    let prop = Propagator::from_spec(spec)?;
    let evolved = prop.evolve_many(std::slice::from_ref(&psi), times)?;
    let magnetization = evolved[0].iter().map(|s| s.z_magnetizations()).collect();
    QuenchData::new(times.to_vec(), magnetization)
}

#[derive(Debug, Clone, Copy)]
pub struct CalibrationOptions {
    pub max_iterations: usize,
    /// Convergence tolerance on the log-parameters.
    pub tolerance: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self { max_iterations: 500, tolerance: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationFit {
    /// rad/s
    pub j0: f64,
    pub alpha: f64,
    /// Sum of squared residuals at the optimum.
    pub objective: f64,
    pub residual_norm: f64,
    /// Covariance of `(j0, alpha)` from the Gauss-Newton approximation.
    pub covariance: [[f64; 2]; 2],
    pub n_observations: usize,
    pub iterations: usize,
}

impl CalibrationFit {
    pub fn j0_hz(&self) -> f64 {
        self.j0 / (2.0 * std::f64::consts::PI)
    }
}

fn with_params(template: &HamiltonianSpec, j0: f64, alpha: f64) -> HamiltonianSpec {
    HamiltonianSpec { j0, alpha, ..*template }
}

fn residuals(data: &QuenchData, spec: &HamiltonianSpec, flipped_site: usize) -> Result<Vec<f64>> {
    let sim = simulate_quench(spec, flipped_site, &data.times)?;
    Ok(sim
        .magnetization
        .iter()
        .flatten()
        .zip(data.magnetization.iter().flatten())
        .map(|(a, b)| a - b)
        .collect())
}

pub fn calibration_objective(data: &QuenchData, spec: &HamiltonianSpec, flipped_site: usize) -> Result<f64> {
    Ok(residuals(data, spec, flipped_site)?.iter().map(|r| r * r).sum())
}

/// Least-squares fit of `j0` and `alpha`, starting from the values in
/// `initial`. The field `b_field` and the pair convention are held fixed.
pub fn calibrate_hamiltonian(
    data: &QuenchData,
    initial: &HamiltonianSpec,
    flipped_site: usize,
    opts: &CalibrationOptions,
) -> Result<CalibrationFit> {
    initial.validate()?;
    if initial.n_spins != data.n_spins() {
        return Err(Error::DimensionMismatch { expected: initial.n_spins, found: data.n_spins() });
    }
    if initial.j0 <= 0.0 {
        return Err(Error::invalid("initial j0 must be positive"));
    }
    crate::spin::check_site(initial.n_spins, flipped_site)?;
    let objective = |x: &[f64]| {
        calibration_objective(data, &with_params(initial, x[0].exp(), x[1].exp()), flipped_site)
            .unwrap_or(f64::INFINITY)
    };
    let nm = NelderMeadOptions {
        max_iterations: opts.max_iterations,
        f_tolerance: 1e-15,
        x_tolerance: opts.tolerance,
        initial_step: 0.05,
        ..Default::default()
    };
    let x0 = [initial.j0.ln(), initial.alpha.ln()];
    let best = nelder_mead(objective, &x0, &nm).map_err(|e| match e {
        Error::FitFailed { message, best } => {
            Error::FitFailed { message, best: best.iter().map(|v| v.exp()).collect() }
        }
        other => other,
    })?;
    let (j0, alpha) = (best.x[0].exp(), best.x[1].exp());
    let objective = best.value;
    let m = data.n_observations();

    // finite-difference Jacobian of the residuals in (j0, alpha)
    let mut jac = DMatrix::<f64>::zeros(m, 2);
    for (col, (p, step)) in [(j0, 1e-5 * j0), (alpha, 1e-5 * alpha)].into_iter().enumerate() {
        let plus = if col == 0 { with_params(initial, p + step, alpha) } else { with_params(initial, j0, p + step) };
        let minus = if col == 0 { with_params(initial, p - step, alpha) } else { with_params(initial, j0, p - step) };
        let rp = residuals(data, &plus, flipped_site)?;
        let rm = residuals(data, &minus, flipped_site)?;
        for i in 0..m {
            jac[(i, col)] = (rp[i] - rm[i]) / (2.0 * step);
        }
    }
    let jtj: Matrix2<f64> = {
        let g = jac.transpose() * &jac;
        Matrix2::new(g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)])
    };
    let sigma2 = if m > 2 { objective / (m - 2) as f64 } else { f64::NAN };
    let covariance = match jtj.try_inverse() {
        Some(inv) => {
            let c = inv * sigma2;
            [[c[(0, 0)], c[(0, 1)]], [c[(1, 0)], c[(1, 1)]]]
        }
        None => [[f64::NAN; 2]; 2],
    };
    Ok(CalibrationFit {
        j0,
        alpha,
        objective,
        residual_norm: objective.sqrt(),
        covariance,
        n_observations: m,
        iterations: best.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truth() -> HamiltonianSpec {
        HamiltonianSpec::from_hz(6, 30.13, 1.21, 1500.0).unwrap()
    }

    fn grid() -> Vec<f64> {
        (0..=30).map(|i| i as f64 * 5e-4).collect()
    }

    #[test]
    fn quench_starts_from_the_flip_and_conserves_sign_structure() {
        let q = simulate_quench(&truth(), 3, &grid()).unwrap();
        assert_eq!(q.magnetization[0], vec![-1.0, -1.0, 1.0, -1.0, -1.0, -1.0]);
        // the excitation leaves the flipped site
        let min_center = q.magnetization.iter().map(|r| r[2]).fold(f64::INFINITY, f64::min);
        assert!(min_center < 0.5);
    }

    #[test]
    fn noiseless_fit_recovers_parameters() {
        let data = simulate_quench(&truth(), 3, &grid()).unwrap();
        let guess = with_params(&truth(), truth().j0 * 1.1, 1.1);
        let fit = calibrate_hamiltonian(&data, &guess, 3, &CalibrationOptions::default()).unwrap();
        assert!((fit.j0 / truth().j0 - 1.0).abs() < 1e-4, "{}", fit.j0_hz());
        assert!((fit.alpha / 1.21 - 1.0).abs() < 1e-4, "{}", fit.alpha);
        assert!(fit.objective < 1e-10);
    }

    fn with_noise(clean: &QuenchData, sigma: f64, seed: u64) -> QuenchData {
        use rand_distr::{Distribution, Normal};
        let mut rng = crate::rng::stream(seed, crate::rng::Purpose::Calibration, 0, 0);
        let normal = Normal::new(0.0, sigma).unwrap();
        let m = clean.magnetization.iter().map(|r| r.iter().map(|v| v + normal.sample(&mut rng)).collect()).collect();
        QuenchData::new(clean.times.clone(), m).unwrap()
    }

    #[test]
    fn objective_at_truth_is_noise_variance_times_count() {
        let clean = simulate_quench(&truth(), 3, &grid()).unwrap();
        let sigma = 0.02;
        let mean = (0..10)
            .map(|seed| calibration_objective(&with_noise(&clean, sigma, seed), &truth(), 3).unwrap())
            .sum::<f64>()
            / 10.0;
        let expected = sigma * sigma * clean.n_observations() as f64;
        assert!((mean / expected - 1.0).abs() < 0.1, "{mean} vs {expected}");
    }

    #[test]
    fn noisy_fit_converges_near_truth() {
        let clean = simulate_quench(&truth(), 3, &grid()).unwrap();
        let data = with_noise(&clean, 0.02, 1);
        let start = HamiltonianSpec { j0: truth().j0 * 0.9, alpha: 1.3, ..truth() };
        let fit = calibrate_hamiltonian(&data, &start, 3, &CalibrationOptions::default()).unwrap();
        assert!((fit.j0 / truth().j0 - 1.0).abs() < 0.05 && (fit.alpha / 1.21 - 1.0).abs() < 0.05);
        // the minimum sits near noise level, far from zero
        assert!(fit.objective > 0.5 * 0.02f64.powi(2) * data.n_observations() as f64);
    }

    #[test]
    fn csv_round_trip() {
        let data = simulate_quench(&truth(), 2, &grid()[..4]).unwrap();
        let text = data.to_csv_string();
        assert!(text.starts_with("t_s,sz_1,sz_2,sz_3,sz_4,sz_5,sz_6\n0,-1,1,-1,-1,-1,-1\n"));
        assert_eq!(QuenchData::from_csv_str(&text).unwrap(), data);
        assert!(QuenchData::from_csv_str("t,sz_1\n0,1\n").is_err());
        assert!(QuenchData::from_csv_str("t_s,sz_1\n0,inf\n").is_err());
        assert!(QuenchData::from_csv_str("t_s,sz_1\n0,NaN\n").is_err());
    }
}
