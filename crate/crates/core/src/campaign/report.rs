//! Analysis of a stored dataset and the files written for it.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::{write_atomic, CODE_VERSION};
use crate::analysis::convergence::exact_series;
use crate::analysis::velocity::{fit_butterfly_velocity, CollapseFit, DEFAULT_THRESHOLD};
use crate::protocol::{MeasurementDataset, OtocEstimator, OtocSeries, SecondMoment, SiteSelection};
use crate::Result;

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    /// Orders to estimate; `0..=order` of the campaign when `None`.
    pub orders: Option<Vec<usize>>,
    /// Sites entering the velocity fit; measured sites among 2..=5 when `None`.
    pub velocity_sites: Option<Vec<usize>>,
    pub threshold: f64,
    /// Also evaluate the exact trace for comparison.
    pub exact: bool,
    pub denominator_floor: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            orders: None,
            velocity_sites: None,
            threshold: DEFAULT_THRESHOLD,
            exact: true,
            denominator_floor: crate::protocol::estimators::DEFAULT_DENOMINATOR_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactSeries {
    pub site: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderDeviation {
    pub order: usize,
    /// `max |O_n - O|` over measured sites and times.
    pub max_abs_deviation: f64,
    pub site: usize,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OtocReport {
    pub code_version: String,
    pub config: serde_json::Value,
    pub n_unitaries_completed: usize,
    pub times: Vec<f64>,
    pub series: Vec<OtocSeries>,
    /// Site-averaged second moment per time.
    pub second_moment: Vec<SecondMoment>,
    pub exact: Option<Vec<ExactSeries>>,
    pub deviations: Vec<OrderDeviation>,
    pub velocity: Option<CollapseFit>,
    pub velocity_error: Option<String>,
    pub unreliable_points: usize,
}

impl OtocReport {
    pub fn series_of_order(&self, order: usize) -> Option<&OtocSeries> {
        self.series.iter().find(|s| s.order == order)
    }
}

pub fn analyze_dataset(data: &MeasurementDataset, opts: &AnalysisOptions) -> Result<OtocReport> {
    let meta = data.metadata();
    let est = OtocEstimator::new(data).with_denominator_floor(opts.denominator_floor);
    let orders = opts.orders.clone().unwrap_or_else(|| (0..=meta.order).collect());
    let series = orders.iter().map(|&n| est.series(n, &meta.w_sites)).collect::<Result<Vec<_>>>()?;
    let second_moment = est.second_moment_series(SiteSelection::All)?;

    let exact = if opts.exact {
        let values = exact_series(meta, &meta.w_sites)?;
        Some(meta.w_sites.iter().zip(values).map(|(&site, values)| ExactSeries { site, values }).collect::<Vec<_>>())
    } else {
        None
    };
    let deviations = match &exact {
        Some(exact) => series
            .iter()
            .map(|s| {
                let mut worst = OrderDeviation { order: s.order, max_abs_deviation: 0.0, site: 0, time: 0.0 };
                for (ss, ex) in s.sites.iter().zip(exact) {
                    for (p, e) in ss.points.iter().zip(&ex.values) {
                        let d = (p.value - e).abs();
                        if d > worst.max_abs_deviation || d.is_nan() {
                            worst = OrderDeviation { order: s.order, max_abs_deviation: d, site: ss.site, time: p.time };
                        }
                    }
                }
                worst
            })
            .collect(),
        None => Vec::new(),
    };

    let velocity_sites = opts
        .velocity_sites
        .clone()
        .unwrap_or_else(|| meta.w_sites.iter().copied().filter(|s| (2..=5).contains(s)).collect());
    let (velocity, velocity_error) = match series.iter().max_by_key(|s| s.order) {
        Some(top) => match fit_butterfly_velocity(top, &velocity_sites, opts.threshold) {
            Ok(fit) => (Some(fit), None),
            Err(e) => (None, Some(e.to_string())),
        },
        None => (None, Some("no series".into())),
    };
    let unreliable_points =
        series.iter().flat_map(|s| &s.sites).flat_map(|s| &s.points).filter(|p| !p.reliable).count();

    Ok(OtocReport {
        code_version: CODE_VERSION.into(),
        config: meta.config.clone(),
        n_unitaries_completed: data.unitary_indices().len(),
        times: meta.times.clone(),
        series,
        second_moment,
        exact,
        deviations,
        velocity,
        velocity_error,
        unreliable_points,
    })
}

pub(crate) fn provenance_header(config: &serde_json::Value) -> String {
    format!("# code_version: {CODE_VERSION}\n# config: {}\n", serde_json::to_string(config).expect("json"))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `otoc_n{k}.csv`, `second_moment.csv`, `exact_otoc.csv`,
/// `plot_data.csv` and `summary.json`.
pub fn write_otoc_report(report: &OtocReport, data: &MeasurementDataset, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let head = provenance_header(&report.config);
    let mut plot = format!("{head}series,site,t_s,value,std_error\n");

    for s in &report.series {
        let mut out = format!("{head}site,t_s,value,std_error,numerator,denominator,reliable,n_unitaries\n");
        for ss in &s.sites {
            for p in &ss.points {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    ss.site, p.time, p.value, p.std_error, p.numerator, p.denominator, p.reliable, p.n_unitaries
                )
                .expect("string write");
                writeln!(plot, "O_{},{},{},{},{}", s.order, ss.site, p.time, p.value, p.std_error).expect("string write");
            }
        }
        write_atomic(&dir.join(format!("otoc_n{}.csv", s.order)), out.as_bytes())?;
    }

    let est = OtocEstimator::new(data);
    let mut m2 = format!("{head}selection,t_s,raw,raw_error,corrected,corrected_error\n");
    let mut rows: Vec<(String, SecondMoment)> =
        report.second_moment.iter().map(|m| ("all".to_string(), *m)).collect();
    for &site in &data.metadata().w_sites {
        for m in est.second_moment_series(SiteSelection::Site(site))? {
            rows.push((site.to_string(), m));
        }
    }
    for (sel, m) in &rows {
        writeln!(
            m2,
            "{sel},{},{},{},{},{}",
            m.time,
            m.raw.value,
            m.raw.std_error,
            opt(m.corrected.map(|c| c.value)),
            opt(m.corrected.map(|c| c.std_error))
        )
        .expect("string write");
    }
    for m in &report.second_moment {
        let c = m.corrected.unwrap_or(m.raw);
        writeln!(plot, "second_moment,all,{},{},{}", m.time, c.value, c.std_error).expect("string write");
    }
    write_atomic(&dir.join("second_moment.csv"), m2.as_bytes())?;

    if let Some(exact) = &report.exact {
        let mut out = format!("{head}site,t_s,value\n");
        for ex in exact {
            for (t, v) in report.times.iter().zip(&ex.values) {
                writeln!(out, "{},{t},{v}", ex.site).expect("string write");
                writeln!(plot, "exact,{},{t},{v},0", ex.site).expect("string write");
            }
        }
        write_atomic(&dir.join("exact_otoc.csv"), out.as_bytes())?;
    }
    write_atomic(&dir.join("plot_data.csv"), plot.as_bytes())?;
    let summary = serde_json::to_string_pretty(report).expect("report serializes");
    write_atomic(&dir.join("summary.json"), summary.as_bytes())
}
