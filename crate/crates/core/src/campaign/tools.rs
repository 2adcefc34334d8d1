//! Ramsey validation of the noise model.

use serde::Serialize;

use crate::noise::{ramsey_contrast, white_coherence_time, NoiseSpec, RamseyCurve};
use crate::rng::{stream, Purpose};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct RamseyReport {
    pub noise: NoiseSpec,
    pub n_samples: usize,
    pub curve: RamseyCurve,
    /// Local maxima rising at least `REVIVAL_PROMINENCE` above the contrast
    /// on both sides within `REVIVAL_WINDOW_S`.
    pub revivals_s: Vec<f64>,
    pub one_over_e_s: Option<f64>,
    pub white_only_one_over_e_s: f64,
}

pub const REVIVAL_PROMINENCE: f64 = 0.01;
pub const REVIVAL_WINDOW_S: f64 = 2e-3;

pub fn prominent_maxima(curve: &RamseyCurve, prominence: f64, window: f64) -> Vec<f64> {
    let (t, c) = (&curve.times, &curve.contrast);
    (1..c.len().saturating_sub(1))
        .filter(|&i| c[i] > c[i - 1] && c[i] >= c[i + 1])
        .filter(|&i| {
            let side_min = |range: &mut dyn Iterator<Item = usize>| {
                range.filter(|&j| (t[j] - t[i]).abs() <= window).map(|j| c[j]).fold(f64::INFINITY, f64::min)
            };
            let left = side_min(&mut (0..i));
            let right = side_min(&mut (i + 1..c.len()));
            c[i] - left >= prominence && c[i] - right >= prominence
        })
        .map(|i| t[i])
        .collect()
}

/// Contrast on a uniform grid `0, step, ..., max_wait`.
pub fn run_ramsey(noise: &NoiseSpec, max_wait: f64, step: f64, n_samples: usize, seed: u64) -> Result<RamseyReport> {
    if !(step > 0.0 && max_wait > step && max_wait.is_finite()) {
        return Err(Error::invalid("need 0 < step < max_wait"));
    }
    let n_points = (max_wait / step).round() as usize + 1;
    let times: Vec<f64> = (0..n_points).map(|i| i as f64 * step).collect();
    let contrast = ramsey_contrast(noise, &times, n_samples, &mut stream(seed, Purpose::Ramsey, 0, 0))?;
    let curve = RamseyCurve { times, contrast };
    Ok(RamseyReport {
        noise: *noise,
        n_samples,
        revivals_s: prominent_maxima(&curve, REVIVAL_PROMINENCE, REVIVAL_WINDOW_S),
        one_over_e_s: curve.first_crossing((-1.0f64).exp()),
        white_only_one_over_e_s: white_coherence_time(noise),
        curve,
    })
}
