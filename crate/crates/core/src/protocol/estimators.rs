//! Modified-OTOC and second-moment estimators over a [`MeasurementDataset`].

use std::collections::BTreeMap;

use serde::Serialize;

use super::{hamming_weight, Branch, MeasurementDataset};
use crate::analysis::jackknife::{jackknife_mean, jackknife_ratio, JackknifeEstimate};
use crate::{Error, Result};

/// Denominators smaller than this mark an estimate as unreliable.
pub const DEFAULT_DENOMINATOR_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OtocPoint {
    pub time: f64,
    pub value: f64,
    pub std_error: f64,
    /// Unitary-averaged numerator and denominator of the ratio.
    pub numerator: f64,
    pub denominator: f64,
    pub reliable: bool,
    pub n_unitaries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiteSeries {
    pub site: usize,
    pub points: Vec<OtocPoint>,
}

impl SiteSeries {
    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.time).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OtocSeries {
    pub order: usize,
    pub sites: Vec<SiteSeries>,
}

impl OtocSeries {
    pub fn site(&self, site: usize) -> Option<&SiteSeries> {
        self.sites.iter().find(|s| s.site == site)
    }
}

/// Which sites enter a second-moment estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteSelection {
    Site(usize),
    /// Average over every measured site.
    All,
}

/// Unitary average of `<W(t)>^2` on the plain `k_0` branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondMoment {
    pub time: f64,
    /// Squares of the finite-shot means, biased upward by about `(1 - <W>^2) / N_M`.
    pub raw: JackknifeEstimate,
    /// Each square replaced by `w^2 - (1 - w^2) / (N_M - 1)`. Equal to `raw` in
    /// exact-expectation mode; `None` when a record has a single shot.
    pub corrected: Option<JackknifeEstimate>,
}

#[derive(Debug, Default, Clone)]
struct UnitaryCell {
    plain: Vec<Option<usize>>,
    v_applied: Option<usize>,
}

/// Record lookup table; build once, query many times.
pub struct OtocEstimator<'a> {
    data: &'a MeasurementDataset,
    denominator_floor: f64,
    cells: Vec<BTreeMap<u32, UnitaryCell>>,
}

impl<'a> OtocEstimator<'a> {
    pub fn new(data: &'a MeasurementDataset) -> Self {
        let meta = data.metadata();
        let n_states = 1usize << meta.order;
        let mut cells: Vec<BTreeMap<u32, UnitaryCell>> = vec![BTreeMap::new(); meta.times.len()];
        for (i, r) in data.records().iter().enumerate() {
            let ti = meta.time_index(r.t_s).expect("validated dataset");
            let cell = cells[ti].entry(r.unitary_index).or_insert_with(|| UnitaryCell {
                plain: vec![None; n_states],
                v_applied: None,
            });
            match r.branch {
                Branch::Plain => cell.plain[r.state_id as usize] = Some(i),
                Branch::VApplied => cell.v_applied = Some(i),
            }
        }
        Self { data, denominator_floor: DEFAULT_DENOMINATOR_FLOOR, cells }
    }

    pub fn with_denominator_floor(mut self, floor: f64) -> Self {
        self.denominator_floor = floor;
        self
    }

    fn site_column(&self, site: usize) -> Result<usize> {
        self.data
            .metadata()
            .w_sites
            .iter()
            .position(|&s| s == site)
            .ok_or_else(|| Error::MissingData(format!("site {site} was not measured")))
    }

    fn time_index(&self, t: f64) -> Result<usize> {
        self.data
            .metadata()
            .time_index(t)
            .ok_or_else(|| Error::MissingData(format!("time {t} not in the campaign grid")))
    }

    /// Per-unitary numerator and denominator terms of the order-`n` estimator
    /// with a custom Hamming-distance weight. Only unitaries holding all
    /// required branches contribute.
    pub fn per_unitary_terms<F>(&self, order: usize, site: usize, t: f64, weight: F) -> Result<(Vec<f64>, Vec<f64>)>
    where
        F: Fn(usize) -> f64,
    {
        let meta = self.data.metadata();
        if order > meta.order {
            return Err(Error::MissingData(format!(
                "order {order} requested but the campaign recorded order {}",
                meta.order
            )));
        }
        let col = self.site_column(site)?;
        let ti = self.time_index(t)?;
        let records = self.data.records();
        let n_states = 1usize << order;
        let weights: Vec<f64> = (0..n_states).map(|s| weight(s.count_ones() as usize)).collect();

        let mut nums = Vec::new();
        let mut dens = Vec::new();
        for cell in self.cells[ti].values() {
            let Some(v_idx) = cell.v_applied else { continue };
            let Some(plain) = cell.plain[..n_states].iter().copied().collect::<Option<Vec<usize>>>() else {
                continue;
            };
            let y = records[v_idx].estimates[col];
            let x0_rec = &records[plain[0]];
            let x0 = x0_rec.estimates[col];
            let mut num = 0.0;
            let mut den = 0.0;
            for (s, &idx) in plain.iter().enumerate() {
                let x = records[idx].estimates[col];
                num += weights[s] * x * y;
                den += weights[s] * if s == 0 { unbiased_square(x0, x0_rec.shots) } else { x * x0 };
            }
            nums.push(num);
            dens.push(den);
        }
        if nums.len() < 2 {
            return Err(Error::MissingData(format!(
                "need complete branches for 2 unitaries at t={t}, found {}",
                nums.len()
            )));
        }
        Ok((nums, dens))
    }

    /// Order-`n` modified OTOC at one site and time, with a delete-one-unitary
    /// jackknife error on the ratio.
    pub fn modified_otoc(&self, order: usize, site: usize, t: f64) -> Result<OtocPoint> {
        let (nums, dens) = self.per_unitary_terms(order, site, t, hamming_weight)?;
        let n = nums.len();
        let numerator = nums.iter().sum::<f64>() / n as f64;
        let denominator = dens.iter().sum::<f64>() / n as f64;
        let reliable = denominator.abs() >= self.denominator_floor;
        let (value, std_error) = match jackknife_ratio(&nums, &dens) {
            Ok(est) => (est.value, est.std_error),
            Err(_) => (numerator / denominator, f64::NAN),
        };
        Ok(OtocPoint {
            time: t,
            value,
            std_error,
            numerator,
            denominator,
            reliable: reliable && std_error.is_finite(),
            n_unitaries: n,
        })
    }

    /// Order-`n` series over the full time grid for each requested site.
    pub fn series(&self, order: usize, sites: &[usize]) -> Result<OtocSeries> {
        let times = &self.data.metadata().times;
        let sites = sites
            .iter()
            .map(|&site| {
                let points =
                    times.iter().map(|&t| self.modified_otoc(order, site, t)).collect::<Result<Vec<_>>>()?;
                Ok(SiteSeries { site, points })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(OtocSeries { order, sites })
    }

    pub fn second_moment(&self, selection: SiteSelection, t: f64) -> Result<SecondMoment> {
        let cols: Vec<usize> = match selection {
            SiteSelection::Site(s) => vec![self.site_column(s)?],
            SiteSelection::All => (0..self.data.metadata().w_sites.len()).collect(),
        };
        let ti = self.time_index(t)?;
        let records = self.data.records();
        let mut raw = Vec::new();
        let mut corrected = Vec::new();
        let mut correctable = true;
        for cell in self.cells[ti].values() {
            let Some(idx) = cell.plain[0] else { continue };
            let rec = &records[idx];
            correctable &= rec.shots != Some(1);
            let m = cols.len() as f64;
            raw.push(cols.iter().map(|&c| rec.estimates[c].powi(2)).sum::<f64>() / m);
            corrected.push(cols.iter().map(|&c| unbiased_square(rec.estimates[c], rec.shots)).sum::<f64>() / m);
        }
        Ok(SecondMoment {
            time: t,
            raw: jackknife_mean(&raw)?,
            corrected: if correctable { Some(jackknife_mean(&corrected)?) } else { None },
        })
    }

    pub fn second_moment_series(&self, selection: SiteSelection) -> Result<Vec<SecondMoment>> {
        self.data.metadata().times.iter().map(|&t| self.second_moment(selection, t)).collect()
    }
}

/// Unbiased estimate of `<W>^2` from the mean of `shots` outcomes of +-1.
fn unbiased_square(w: f64, shots: Option<u32>) -> f64 {
    match shots {
        Some(m) if m > 1 => w * w - (1.0 - w * w) / (m as f64 - 1.0),
        _ => w * w,
    }
}

pub fn estimate_modified_otoc(data: &MeasurementDataset, order: usize, site: usize, t: f64) -> Result<OtocPoint> {
    OtocEstimator::new(data).modified_otoc(order, site, t)
}

pub fn estimate_second_moment(data: &MeasurementDataset, selection: SiteSelection, t: f64) -> Result<SecondMoment> {
    OtocEstimator::new(data).second_moment(selection, t)
}
