//! Butterfly-velocity extraction from threshold crossings of OTOC series.
//!
//! Each site's series is interpolated and its first downward crossing `t_c`
//! of the threshold located. The velocity comes from a least-squares fit of
//! `t_c = (j - 1) / v` through the origin. Two interpolants are used: a
//! monotone cubic (primary) and a four-parameter `tanh` profile fit; the
//! velocity uncertainty is the spread between them.

use serde::Serialize;

use super::interp::Pchip;
use super::optimize::{nelder_mead, NelderMeadOptions};
use crate::protocol::{OtocSeries, SiteSeries};
use crate::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingMethod {
    MonotoneCubic,
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SiteCrossing {
    pub site: usize,
    pub t_c: f64,
}

/// Unconstrained `t_c = intercept + (j - 1) / velocity`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub velocity: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodFit {
    pub method: CrossingMethod,
    pub v2: f64,
    pub crossings: Vec<SiteCrossing>,
    /// Sites whose series never crosses the threshold inside the window.
    pub excluded_sites: Vec<usize>,
    pub intercept_fit: Option<LineFit>,
    /// RMS over sites `j > 1` of `v2 * t_c(j) / (j - 1) - 1`: how far the
    /// rescaled crossings sit from a perfect collapse.
    pub collapse_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseFit {
    pub v2: f64,
    /// `|v2(monotone cubic) - v2(tanh)|`; `None` if the tanh fit failed.
    pub delta_v2: Option<f64>,
    pub threshold: f64,
    pub primary: MethodFit,
    pub alternate: Option<MethodFit>,
}

impl CollapseFit {
    pub fn collapse_residual(&self) -> f64 {
        self.primary.collapse_residual
    }
}

/// First downward crossing of `threshold` for one site, or `None`.
pub fn crossing_time(series: &SiteSeries, threshold: f64, method: CrossingMethod) -> Result<Option<f64>> {
    let (t, y): (Vec<f64>, Vec<f64>) =
        series.points.iter().filter(|p| p.reliable && p.value.is_finite()).map(|p| (p.time, p.value)).unzip();
    if t.len() < 2 {
        return Ok(None);
    }
    match method {
        CrossingMethod::MonotoneCubic => Ok(Pchip::new(&t, &y)?.first_downward_crossing(threshold)),
        CrossingMethod::Tanh => tanh_crossing(&t, &y, threshold),
    }
}

/// Fits `a + b tanh((t0 - t) / w)` and inverts it at the threshold.
fn tanh_crossing(t: &[f64], y: &[f64], threshold: f64) -> Result<Option<f64>> {
    if y[0] <= threshold {
        return Ok(None);
    }
    if t.len() < 4 {
        return Err(Error::InsufficientStatistics("tanh profile needs 4 points".into()));
    }
    // work on a unit time axis so the fit is scale-free
    let (t_lo, span) = (t[0], t[t.len() - 1] - t[0]);
    let s: Vec<f64> = t.iter().map(|v| (v - t_lo) / span).collect();
    let model = |p: &[f64], x: f64| p[0] + p[1] * ((p[2] - x) / p[3].exp()).tanh();
    let sse = |p: &[f64]| s.iter().zip(y).map(|(x, v)| (model(p, *x) - v).powi(2)).sum::<f64>();

    let y_hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let y_lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let guess_center = Pchip::new(&s, y)?.first_downward_crossing(threshold).unwrap_or(1.0);
    let x0 = [0.5 * (y_hi + y_lo), 0.5 * (y_hi - y_lo).max(1e-3), guess_center, (0.25f64).ln()];
    let opts = NelderMeadOptions { max_iterations: 20_000, f_tolerance: 1e-16, x_tolerance: 1e-10, initial_step: 0.1, ..Default::default() };
    let best = match nelder_mead(sse, &x0, &opts) {
        Ok(m) => m.x,
        Err(Error::FitFailed { best, .. }) => best,
        Err(e) => return Err(e),
    };
    let arg = (threshold - best[0]) / best[1];
    if !(arg.abs() < 1.0) || best[1] <= 0.0 {
        return Ok(None);
    }
    let crossing = best[2] - best[3].exp() * arg.atanh();
    if !(0.0..=1.0).contains(&crossing) {
        return Ok(None);
    }
    Ok(Some(t_lo + crossing * span))
}

/// Crossing times and velocity for one interpolation method.
pub fn fit_with_method(
    series: &OtocSeries,
    sites: &[usize],
    threshold: f64,
    method: CrossingMethod,
) -> Result<MethodFit> {
    let mut crossings = Vec::new();
    let mut excluded_sites = Vec::new();
    for &site in sites {
        let s = series
            .site(site)
            .ok_or_else(|| Error::MissingData(format!("no series for site {site}")))?;
        match crossing_time(s, threshold, method)? {
            Some(t_c) => crossings.push(SiteCrossing { site, t_c }),
            None => excluded_sites.push(site),
        }
    }
    let fitted: Vec<(f64, f64)> = crossings
        .iter()
        .filter(|c| c.site > 1)
        .map(|c| ((c.site - 1) as f64, c.t_c))
        .collect();
    if fitted.len() < 2 {
        return Err(Error::FitFailed {
            message: format!("only {} sites beyond site 1 cross the threshold", fitted.len()),
            best: vec![],
        });
    }
    let sxx: f64 = fitted.iter().map(|(x, _)| x * x).sum();
    let sxt: f64 = fitted.iter().map(|(x, t)| x * t).sum();
    if sxt <= 0.0 {
        return Err(Error::FitFailed { message: "crossing times do not grow with distance".into(), best: vec![] });
    }
    let v2 = sxx / sxt;
    let collapse_residual =
        (fitted.iter().map(|(x, t)| (v2 * t / x - 1.0).powi(2)).sum::<f64>() / fitted.len() as f64).sqrt();
    Ok(MethodFit { method, v2, crossings, excluded_sites, intercept_fit: line_fit(&fitted), collapse_residual })
}

fn line_fit(points: &[(f64, f64)]) -> Option<LineFit> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mt = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxt: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - mt)).sum();
    if sxx == 0.0 || sxt == 0.0 {
        return None;
    }
    let slope = sxt / sxx;
    Some(LineFit { velocity: 1.0 / slope, intercept: mt - slope * mx })
}

/// Velocity from the monotone-cubic crossings, with the tanh fit as the
/// alternate that sets `delta_v2`. Site 1 is never used in the fit.
pub fn fit_butterfly_velocity(series: &OtocSeries, sites: &[usize], threshold: f64) -> Result<CollapseFit> {
    let primary = fit_with_method(series, sites, threshold, CrossingMethod::MonotoneCubic)?;
    let alternate = fit_with_method(series, sites, threshold, CrossingMethod::Tanh).ok();
    Ok(CollapseFit {
        v2: primary.v2,
        delta_v2: alternate.as_ref().map(|a| (a.v2 - primary.v2).abs()),
        threshold,
        primary,
        alternate,
    })
}
