//! Persisted measurement records.
//!
//! Columnar text format (`otoc-dataset v1`):
//!
//! ```text
//! # otoc-dataset v1
//! # metadata: {"code_version":"0.1.0","n_spins":10,...}
//! unitary_index,branch,state_id,t_s,site,estimate,shots
//! 0,plain,0,0,1,0.24,150
//! ```
//!
//! One row per `(record, site)`. `branch` is `plain` or `v_applied`,
//! `state_id` is `s` of `k_s`, `t_s` is the evolution time in seconds and
//! `shots` is empty in exact-expectation mode. Floats use the shortest
//! representation that round-trips. Rows appear in canonical order
//! (unitary, time, branch, state, site), so equal datasets serialize to equal
//! bytes.
//!
//! The JSON container carries the same content as
//! `{"format": "otoc-dataset", "version": 1, "metadata": {...}, "records": [...]}`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::Branch;
use crate::noise::NoiseSpec;
use crate::spin::{HamiltonianSpec, Pauli};
use crate::{Error, Result};

pub const DATASET_FORMAT: &str = "otoc-dataset";
pub const DATASET_VERSION: u32 = 1;
const CSV_HEADER: &str = "unitary_index,branch,state_id,t_s,site,estimate,shots";

/// Campaign-level facts needed to interpret the records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub code_version: String,
    pub seed: u64,
    pub n_unitaries: u32,
    pub order: usize,
    pub hamiltonian: HamiltonianSpec,
    pub v_site: usize,
    pub v_pauli: Pauli,
    pub w_sites: Vec<usize>,
    pub times: Vec<f64>,
    pub noise: Option<NoiseSpec>,
    pub exact_expectation: bool,
    /// The resolved configuration that produced the data, echoed verbatim.
    #[serde(default)]
    pub config: serde_json::Value,
}

impl DatasetMetadata {
    pub fn n_spins(&self) -> usize {
        self.hamiltonian.n_spins
    }

    /// Position of `t` in the time grid (exact match).
    pub fn time_index(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&x| x == t)
    }

    fn validate(&self) -> Result<()> {
        self.hamiltonian.validate()?;
        let n = self.n_spins();
        crate::spin::check_site(n, self.v_site)?;
        if self.order > n {
            return Err(Error::invalid(format!("order {} exceeds {n} spins", self.order)));
        }
        if self.w_sites.is_empty() {
            return Err(Error::invalid("no measured sites"));
        }
        for pair in self.w_sites.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::invalid("measured sites must be strictly increasing"));
            }
        }
        for &s in &self.w_sites {
            crate::spin::check_site(n, s)?;
        }
        if self.times.is_empty() || self.times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::invalid("times must be non-empty, finite and >= 0"));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("times must be strictly increasing"));
        }
        if let Some(noise) = &self.noise {
            noise.validate()?;
        }
        Ok(())
    }
}

/// Estimated `<sigma^x_j>` for every measured site of one measurement setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub unitary_index: u32,
    pub branch: Branch,
    pub state_id: u32,
    pub t_s: f64,
    /// `None` in exact-expectation mode.
    pub shots: Option<u32>,
    /// Aligned with [`DatasetMetadata::w_sites`].
    pub estimates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementDataset {
    metadata: DatasetMetadata,
    records: Vec<MeasurementRecord>,
}

#[derive(Serialize, Deserialize)]
struct Container {
    format: String,
    version: u32,
    metadata: DatasetMetadata,
    records: Vec<MeasurementRecord>,
}

impl MeasurementDataset {
    /// Validates and canonically orders the records.
    pub fn new(metadata: DatasetMetadata, mut records: Vec<MeasurementRecord>) -> Result<Self> {
        metadata.validate()?;
        let mut seen = BTreeSet::new();
        for r in &records {
            if r.estimates.len() != metadata.w_sites.len() {
                return Err(Error::DimensionMismatch {
                    expected: metadata.w_sites.len(),
                    found: r.estimates.len(),
                });
            }
            if r.estimates.iter().any(|e| !(-1.0..=1.0).contains(e)) {
                return Err(Error::invalid("estimate outside [-1, 1]"));
            }
            if !r.t_s.is_finite() || r.t_s < 0.0 {
                return Err(Error::invalid("record time must be finite and >= 0"));
            }
            if r.state_id as usize >= 1usize << metadata.order {
                return Err(Error::invalid(format!("state id {} out of range", r.state_id)));
            }
            if metadata.time_index(r.t_s).is_none() {
                return Err(Error::invalid(format!("record time {} not in the campaign grid", r.t_s)));
            }
            if r.branch == Branch::VApplied && r.state_id != 0 {
                return Err(Error::invalid("v_applied records must use state 0"));
            }
            match (metadata.exact_expectation, r.shots) {
                (true, None) => {}
                (false, Some(n)) if n > 0 => {}
                _ => return Err(Error::invalid("shot count inconsistent with readout mode")),
            }
            if !seen.insert((r.unitary_index, r.branch, r.state_id, r.t_s.to_bits())) {
                return Err(Error::invalid(format!(
                    "duplicate record (u={}, {}, k={}, t={})",
                    r.unitary_index,
                    r.branch.as_str(),
                    r.state_id,
                    r.t_s
                )));
            }
        }
        records.sort_by(|a, b| {
            (a.unitary_index, a.t_s, a.branch, a.state_id)
                .partial_cmp(&(b.unitary_index, b.t_s, b.branch, b.state_id))
                .expect("times are finite")
        });
        Ok(Self { metadata, records })
    }

    pub fn metadata(&self) -> &DatasetMetadata {
        &self.metadata
    }

    pub fn records(&self) -> &[MeasurementRecord] {
        &self.records
    }

    pub fn n_spins(&self) -> usize {
        self.metadata.n_spins()
    }

    pub fn unitary_indices(&self) -> BTreeSet<u32> {
        self.records.iter().map(|r| r.unitary_index).collect()
    }

    /// Merges datasets that cover disjoint unitary indices of one campaign.
    pub fn merge(self, other: MeasurementDataset) -> Result<Self> {
        if other.metadata != self.metadata {
            return Err(Error::ResumeMismatch("datasets come from different campaigns".into()));
        }
        let mine = self.unitary_indices();
        if other.unitary_indices().iter().any(|u| mine.contains(u)) {
            return Err(Error::invalid("datasets overlap in unitary indices"));
        }
        let mut records = self.records;
        records.extend(other.records);
        Self::new(self.metadata, records)
    }

    pub fn with_metadata(self, metadata: DatasetMetadata) -> Result<Self> {
        Self::new(metadata, self.records)
    }

    pub fn to_csv_string(&self) -> String {
        let meta = serde_json::to_string(&self.metadata).expect("metadata serializes");
        let mut out = format!("# {DATASET_FORMAT} v{DATASET_VERSION}\n# metadata: {meta}\n{CSV_HEADER}\n");
        for r in &self.records {
            let shots = r.shots.map(|s| s.to_string()).unwrap_or_default();
            for (site, est) in self.metadata.w_sites.iter().zip(&r.estimates) {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    r.unitary_index,
                    r.branch.as_str(),
                    r.state_id,
                    r.t_s,
                    site,
                    est,
                    shots
                )
                .expect("writing to a String");
            }
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.splitn(3, '\n');
        let magic = lines.next().unwrap_or_default().trim_end_matches('\r');
        if magic != format!("# {DATASET_FORMAT} v{DATASET_VERSION}") {
            return Err(Error::parse(format!("unrecognized dataset header {magic:?}")));
        }
        let meta_line = lines.next().unwrap_or_default().trim_end_matches('\r');
        let meta_json = meta_line
            .strip_prefix("# metadata: ")
            .ok_or_else(|| Error::parse("missing metadata line"))?;
        let metadata: DatasetMetadata = serde_json::from_str(meta_json).map_err(Error::parse)?;
        metadata.validate()?;
        let body = lines.next().unwrap_or_default();

        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
        let header = reader.headers().map_err(Error::parse)?.clone();
        if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
            return Err(Error::parse("unexpected column header"));
        }
        let n_sites = metadata.w_sites.len();
        let mut records: Vec<MeasurementRecord> = Vec::new();
        let mut pending: Option<MeasurementRecord> = None;
        for row in reader.records() {
            let row = row.map_err(Error::parse)?;
            if row.len() != 7 {
                return Err(Error::parse("expected 7 columns"));
            }
            let unitary_index: u32 = parse_field(&row[0], "unitary_index")?;
            let branch = match &row[1] {
                "plain" => Branch::Plain,
                "v_applied" => Branch::VApplied,
                other => return Err(Error::parse(format!("unknown branch {other:?}"))),
            };
            let state_id: u32 = parse_field(&row[2], "state_id")?;
            let t_s: f64 = parse_field(&row[3], "t_s")?;
            let site: usize = parse_field(&row[4], "site")?;
            let estimate: f64 = parse_field(&row[5], "estimate")?;
            let shots: Option<u32> =
                if row[6].is_empty() { None } else { Some(parse_field(&row[6], "shots")?) };

            let same_cell = pending.as_ref().is_some_and(|p| {
                p.unitary_index == unitary_index
                    && p.branch == branch
                    && p.state_id == state_id
                    && p.t_s.to_bits() == t_s.to_bits()
                    && p.estimates.len() < n_sites
            });
            if !same_cell {
                if let Some(done) = pending.take() {
                    records.push(done);
                }
                pending = Some(MeasurementRecord {
                    unitary_index,
                    branch,
                    state_id,
                    t_s,
                    shots,
                    estimates: Vec::with_capacity(n_sites),
                });
            }
            let rec = pending.as_mut().expect("just set");
            if rec.shots != shots {
                return Err(Error::parse("shot count differs between sites of one record"));
            }
            if metadata.w_sites.get(rec.estimates.len()) != Some(&site) {
                return Err(Error::parse(format!("site {site} out of order")));
            }
            rec.estimates.push(estimate);
        }
        if let Some(done) = pending.take() {
            records.push(done);
        }
        if let Some(short) = records.iter().find(|r| r.estimates.len() != n_sites) {
            return Err(Error::parse(format!(
                "record for unitary {} has {} of {n_sites} sites",
                short.unitary_index,
                short.estimates.len()
            )));
        }
        Self::new(metadata, records)
    }

    pub fn to_json_string(&self) -> String {
        let container = Container {
            format: DATASET_FORMAT.into(),
            version: DATASET_VERSION,
            metadata: self.metadata.clone(),
            records: self.records.clone(),
        };
        serde_json::to_string_pretty(&container).expect("dataset serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let c: Container = serde_json::from_str(text).map_err(Error::parse)?;
        if c.format != DATASET_FORMAT || c.version != DATASET_VERSION {
            return Err(Error::parse(format!("unsupported container {} v{}", c.format, c.version)));
        }
        Self::new(c.metadata, c.records)
    }

    /// Reads either format, chosen by the file extension (`.json` or CSV).
    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json_str(&text)
        } else {
            Self::from_csv_str(&text)
        }
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, name: &str) -> Result<T> {
    s.parse().map_err(|_| Error::parse(format!("bad {name} value {s:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn metadata(exact: bool) -> DatasetMetadata {
        DatasetMetadata {
            code_version: "test".into(),
            seed: 1,
            n_unitaries: 2,
            order: 1,
            hamiltonian: HamiltonianSpec::from_hz(3, 30.0, 1.2, 1500.0).unwrap(),
            v_site: 1,
            v_pauli: Pauli::Z,
            w_sites: vec![1, 3],
            times: vec![0.0, 1e-3],
            noise: None,
            exact_expectation: exact,
            config: serde_json::Value::Null,
        }
    }

    fn record(u: u32, branch: Branch, s: u32, t: f64, est: [f64; 2]) -> MeasurementRecord {
        MeasurementRecord { unitary_index: u, branch, state_id: s, t_s: t, shots: Some(150), estimates: est.to_vec() }
    }

    fn sample() -> MeasurementDataset {
        let recs = vec![
            record(1, Branch::Plain, 0, 1e-3, [0.1, -0.2]),
            record(0, Branch::VApplied, 0, 0.0, [0.3, 1.0 / 3.0]),
            record(0, Branch::Plain, 1, 0.0, [-1.0, 0.5]),
            record(0, Branch::Plain, 0, 0.0, [0.0, 0.25]),
        ];
        MeasurementDataset::new(metadata(false), recs).unwrap()
    }

    #[test]
    fn csv_round_trip_is_lossless_and_canonical() {
        let ds = sample();
        let text = ds.to_csv_string();
        assert!(text.starts_with("# otoc-dataset v1\n# metadata: {"));
        let lines: Vec<&str> = text.lines().skip(3).collect();
        assert_eq!(lines[0], "0,plain,0,0,1,0,150");
        assert_eq!(lines[5], "0,v_applied,0,0,3,0.3333333333333333,150");
        let back = MeasurementDataset::from_csv_str(&text).unwrap();
        assert_eq!(back, ds);
        assert_eq!(back.to_csv_string(), text);
    }

    #[test]
    fn json_round_trip() {
        let ds = sample();
        assert_eq!(MeasurementDataset::from_json_str(&ds.to_json_string()).unwrap(), ds);
    }

    #[test]
    fn rejects_invalid_records() {
        let bad_range = vec![record(0, Branch::Plain, 0, 0.0, [1.5, 0.0])];
        assert!(MeasurementDataset::new(metadata(false), bad_range).is_err());
        let bad_v = vec![record(0, Branch::VApplied, 1, 0.0, [0.0, 0.0])];
        assert!(MeasurementDataset::new(metadata(false), bad_v).is_err());
        let dup = vec![record(0, Branch::Plain, 0, 0.0, [0.0, 0.0]); 2];
        assert!(MeasurementDataset::new(metadata(false), dup).is_err());
        let wrong_mode = vec![record(0, Branch::Plain, 0, 0.0, [0.0, 0.0])];
        assert!(MeasurementDataset::new(metadata(true), wrong_mode).is_err());
    }

    #[test]
    fn rejects_malformed_csv() {
        let text = sample().to_csv_string();
        assert!(MeasurementDataset::from_csv_str("").is_err());
        assert!(MeasurementDataset::from_csv_str(&text.replace("v_applied", "other")).is_err());
        // drop one site row: the record becomes incomplete
        let truncated: String = text.lines().take(text.lines().count() - 1).map(|l| format!("{l}\n")).collect();
        assert!(MeasurementDataset::from_csv_str(&truncated).is_err());
    }

    #[test]
    fn merge_requires_disjoint_unitaries() {
        let ds = sample();
        let split: Vec<_> = ds.records().iter().filter(|r| r.unitary_index == 1).cloned().collect();
        let rest: Vec<_> = ds.records().iter().filter(|r| r.unitary_index == 0).cloned().collect();
        let a = MeasurementDataset::new(metadata(false), rest).unwrap();
        let b = MeasurementDataset::new(metadata(false), split).unwrap();
        assert_eq!(a.clone().merge(b).unwrap(), ds);
        assert!(a.clone().merge(a).is_err());
    }
}
