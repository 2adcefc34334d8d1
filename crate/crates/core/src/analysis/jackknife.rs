//! Delete-one jackknife over independent samples (here: random unitaries).

use serde::Serialize;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JackknifeEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_resamples: usize,
}

/// Jackknife of an arbitrary statistic. `stat` is evaluated on the full slice
/// and on every leave-one-out subset, so this costs O(n^2) for linear
/// statistics; prefer [`jackknife_mean`] and [`jackknife_ratio`] for those.
pub fn jackknife<T: Clone, F>(samples: &[T], stat: F) -> Result<JackknifeEstimate>
where
    F: Fn(&[T]) -> Result<f64>,
{
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientStatistics(format!("jackknife needs 2 samples, got {n}")));
    }
    let value = stat(samples)?;
    let mut subset: Vec<T> = samples[1..].to_vec();
    let mut loo = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            // subset currently omits sample i-1; swap it back in for sample i
            subset[i - 1] = samples[i - 1].clone();
        }
        loo.push(stat(&subset)?);
    }
    Ok(JackknifeEstimate { value, std_error: spread(&loo), n_resamples: n })
}

/// Jackknife of `f(mean(x))`, in O(n).
pub fn jackknife_mean_map<F>(values: &[f64], f: F) -> Result<JackknifeEstimate>
where
    F: Fn(f64) -> Result<f64>,
{
    let n = values.len();
    if n < 2 {
        return Err(Error::InsufficientStatistics(format!("jackknife needs 2 samples, got {n}")));
    }
    let total: f64 = values.iter().sum();
    let value = f(total / n as f64)?;
    let loo = values
        .iter()
        .map(|v| f((total - v) / (n - 1) as f64))
        .collect::<Result<Vec<_>>>()?;
    Ok(JackknifeEstimate { value, std_error: spread(&loo), n_resamples: n })
}

pub fn jackknife_mean(values: &[f64]) -> Result<JackknifeEstimate> {
    jackknife_mean_map(values, Ok)
}

/// Jackknife of `sum(num) / sum(den)`, in O(n). Leave-one-out subsets whose
/// denominator vanishes are an error.
pub fn jackknife_ratio(num: &[f64], den: &[f64]) -> Result<JackknifeEstimate> {
    if num.len() != den.len() {
        return Err(Error::DimensionMismatch { expected: num.len(), found: den.len() });
    }
    let n = num.len();
    if n < 2 {
        return Err(Error::InsufficientStatistics(format!("jackknife needs 2 samples, got {n}")));
    }
    let sn: f64 = num.iter().sum();
    let sd: f64 = den.iter().sum();
    if sd == 0.0 {
        return Err(Error::InsufficientStatistics("ratio denominator is zero".into()));
    }
    let mut loo = Vec::with_capacity(n);
    for (a, b) in num.iter().zip(den) {
        let d = sd - b;
        if d == 0.0 {
            return Err(Error::InsufficientStatistics("leave-one-out denominator is zero".into()));
        }
        loo.push((sn - a) / d);
    }
    Ok(JackknifeEstimate { value: sn / sd, std_error: spread(&loo), n_resamples: n })
}

fn spread(loo: &[f64]) -> f64 {
    let n = loo.len() as f64;
    let mean = loo.iter().sum::<f64>() / n;
    let ss: f64 = loo.iter().map(|x| (x - mean).powi(2)).sum();
    ((n - 1.0) / n * ss).sqrt()
}
