//! Second Renyi entropies from randomized z-basis measurements.
//!
//! Records are stored as bitstring histograms per `(unitary, time)`. Text
//! format (`otoc-zbasis v1`):
//!
//! ```text
//! # otoc-zbasis v1
//! # metadata: {...}
//! unitary_index,t_s,outcome,count
//! 0,0.002,0110000000,3
//! ```
//!
//! `outcome` lists the z outcomes of sites 1..N from left to right (`0` is
//! spin up).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analysis::jackknife::{jackknife_mean, jackknife_mean_map, JackknifeEstimate};
use crate::noise::NoiseSpec;
use crate::spin::HamiltonianSpec;
use crate::{Error, Result};

pub const ZBASIS_FORMAT: &str = "otoc-zbasis";
pub const ZBASIS_VERSION: u32 = 1;
const CSV_HEADER: &str = "unitary_index,t_s,outcome,count";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZBasisMetadata {
    pub code_version: String,
    pub seed: u64,
    pub n_unitaries: u32,
    pub shots: u32,
    pub hamiltonian: HamiltonianSpec,
    pub times: Vec<f64>,
    pub noise: Option<NoiseSpec>,
    #[serde(default)]
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZBasisRecord {
    pub unitary_index: u32,
    pub t_s: f64,
    /// Basis index -> number of shots with that outcome.
    pub counts: BTreeMap<u64, u32>,
}

impl ZBasisRecord {
    pub fn from_outcomes(unitary_index: u32, t_s: f64, outcomes: &[u64]) -> Self {
        let mut counts = BTreeMap::new();
        for &o in outcomes {
            *counts.entry(o).or_insert(0) += 1;
        }
        Self { unitary_index, t_s, counts }
    }

    pub fn n_shots(&self) -> u64 {
        self.counts.values().map(|&c| c as u64).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZBasisRecords {
    metadata: ZBasisMetadata,
    records: Vec<ZBasisRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenyiEstimate {
    pub time: f64,
    pub partition: Vec<usize>,
    pub entropy: f64,
    pub std_error: f64,
    pub purity: JackknifeEstimate,
}

impl ZBasisRecords {
    pub fn new(metadata: ZBasisMetadata, mut records: Vec<ZBasisRecord>) -> Result<Self> {
        metadata.hamiltonian.validate()?;
        let n = metadata.hamiltonian.n_spins;
        if metadata.times.is_empty() || metadata.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("times must be non-empty and strictly increasing"));
        }
        if metadata.times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::invalid("times must be finite and >= 0"));
        }
        let mut seen = BTreeSet::new();
        for r in &records {
            if !metadata.times.contains(&r.t_s) {
                return Err(Error::invalid(format!("record time {} not in the campaign grid", r.t_s)));
            }
            if !seen.insert((r.unitary_index, r.t_s.to_bits())) {
                return Err(Error::invalid("duplicate (unitary, time) record"));
            }
            if r.counts.keys().any(|&o| o >> n != 0) || r.counts.values().any(|&c| c == 0) {
                return Err(Error::invalid("outcome outside the basis or zero count"));
            }
            if r.n_shots() < 2 {
                return Err(Error::invalid("each record needs at least 2 shots"));
            }
        }
        records.sort_by(|a, b| (a.unitary_index, a.t_s).partial_cmp(&(b.unitary_index, b.t_s)).expect("finite"));
        Ok(Self { metadata, records })
    }

    pub fn metadata(&self) -> &ZBasisMetadata {
        &self.metadata
    }

    pub fn records(&self) -> &[ZBasisRecord] {
        &self.records
    }

    pub fn n_spins(&self) -> usize {
        self.metadata.hamiltonian.n_spins
    }

    pub fn to_csv_string(&self) -> String {
        let n = self.n_spins();
        let meta = serde_json::to_string(&self.metadata).expect("metadata serializes");
        let mut out = format!("# {ZBASIS_FORMAT} v{ZBASIS_VERSION}\n# metadata: {meta}\n{CSV_HEADER}\n");
        for r in &self.records {
            for (&o, &c) in &r.counts {
                let bits: String = (0..n).map(|i| if o >> i & 1 == 1 { '1' } else { '0' }).collect();
                writeln!(out, "{},{},{bits},{c}", r.unitary_index, r.t_s).expect("writing to a String");
            }
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.splitn(3, '\n');
        let magic = lines.next().unwrap_or_default().trim_end_matches('\r');
        if magic != format!("# {ZBASIS_FORMAT} v{ZBASIS_VERSION}") {
            return Err(Error::parse(format!("unrecognized z-basis header {magic:?}")));
        }
        let meta_json = lines
            .next()
            .unwrap_or_default()
            .trim_end_matches('\r')
            .strip_prefix("# metadata: ")
            .ok_or_else(|| Error::parse("missing metadata line"))?;
        let metadata: ZBasisMetadata = serde_json::from_str(meta_json).map_err(Error::parse)?;
        metadata.hamiltonian.validate()?;
        let n = metadata.hamiltonian.n_spins;
        let body = lines.next().unwrap_or_default();
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
        let header = reader.headers().map_err(Error::parse)?.clone();
        if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
            return Err(Error::parse("unexpected column header"));
        }
        let mut grouped: BTreeMap<(u32, u64), ZBasisRecord> = BTreeMap::new();
        for row in reader.records() {
            let row = row.map_err(Error::parse)?;
            if row.len() != 4 {
                return Err(Error::parse("expected 4 columns"));
            }
            let u: u32 = row[0].parse().map_err(|_| Error::parse("bad unitary_index"))?;
            let t: f64 = row[1].parse().map_err(|_| Error::parse("bad t_s"))?;
            let bits = &row[2];
            if bits.len() != n || !bits.bytes().all(|b| b == b'0' || b == b'1') {
                return Err(Error::parse(format!("outcome {bits:?} is not a {n}-site bitstring")));
            }
            let o = bits.bytes().enumerate().fold(0u64, |acc, (i, b)| acc | ((b - b'0') as u64) << i);
            let c: u32 = row[3].parse().map_err(|_| Error::parse("bad count"))?;
            let rec = grouped
                .entry((u, t.to_bits()))
                .or_insert_with(|| ZBasisRecord { unitary_index: u, t_s: t, counts: BTreeMap::new() });
            if rec.counts.insert(o, c).is_some() {
                return Err(Error::parse("repeated outcome within one record"));
            }
        }
        Self::new(metadata, grouped.into_values().collect())
    }

    /// Per-unitary purity estimates of subsystem `partition` at time `t`.
    pub fn purities(&self, t: f64, partition: &[usize]) -> Result<Vec<f64>> {
        check_partition(self.n_spins(), partition)?;
        let v: Vec<f64> = self
            .records
            .iter()
            .filter(|r| r.t_s == t)
            .map(|r| purity_from_counts(&r.counts, partition))
            .collect();
        if v.is_empty() {
            return Err(Error::MissingData(format!("no z-basis records at t={t}")));
        }
        Ok(v)
    }

    pub fn purity(&self, t: f64, partition: &[usize]) -> Result<JackknifeEstimate> {
        jackknife_mean(&self.purities(t, partition)?)
    }

    /// `S2 = -log2 Tr[rho_A^2]` with a jackknife error. A non-positive purity
    /// estimate (full sample or any leave-one-out subset) is an error.
    pub fn renyi_entropy(&self, t: f64, partition: &[usize]) -> Result<RenyiEstimate> {
        let purities = self.purities(t, partition)?;
        let purity = jackknife_mean(&purities)?;
        let s = jackknife_mean_map(&purities, |p| {
            if p > 0.0 {
                Ok(-p.log2())
            } else {
                Err(Error::InsufficientStatistics(format!("purity estimate {p} is not positive")))
            }
        })?;
        Ok(RenyiEstimate { time: t, partition: partition.to_vec(), entropy: s.value, std_error: s.std_error, purity })
    }
}

pub fn estimate_renyi_entropy(records: &ZBasisRecords, t: f64, partition: &[usize]) -> Result<RenyiEstimate> {
    records.renyi_entropy(t, partition)
}

fn check_partition(n: usize, partition: &[usize]) -> Result<()> {
    if partition.is_empty() {
        return Err(Error::invalid("empty partition"));
    }
    let mut seen = BTreeSet::new();
    for &s in partition {
        crate::spin::check_site(n, s)?;
        if !seen.insert(s) {
            return Err(Error::invalid(format!("site {s} repeated in partition")));
        }
    }
    Ok(())
}

fn marginal_index(outcome: u64, partition: &[usize]) -> usize {
    partition.iter().enumerate().fold(0, |acc, (m, &site)| acc | (((outcome >> (site - 1)) & 1) as usize) << m)
}

/// Applies `K = (x)_m [[1, -1/2], [-1/2, 1]]` in place.
fn hamming_kernel(v: &mut [f64]) {
    let mut half = 1;
    while half < v.len() {
        for block in v.chunks_mut(2 * half) {
            let (a, b) = block.split_at_mut(half);
            for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                let (p, q) = (*x, *y);
                *x = p - 0.5 * q;
                *y = q - 0.5 * p;
            }
        }
        half *= 2;
    }
}

/// Unbiased single-unitary purity estimate from outcome counts.
pub fn purity_from_counts(counts: &BTreeMap<u64, u32>, partition: &[usize]) -> f64 {
    let dim = 1usize << partition.len();
    let mut h = vec![0.0; dim];
    for (&o, &c) in counts {
        h[marginal_index(o, partition)] += c as f64;
    }
    let m: f64 = h.iter().sum();
    let mut kh = h.clone();
    hamming_kernel(&mut kh);
    let quad: f64 = h.iter().zip(&kh).map(|(a, b)| a * b).sum();
    dim as f64 * (quad - m) / (m * (m - 1.0))
}

/// Purity `2^{N_A} sum (-2)^{-D} P(s) P(s')` of one exact outcome distribution
/// over the full basis; averaging over unitaries gives `Tr[rho_A^2]`.
pub fn purity_from_probabilities(probabilities: &[f64], partition: &[usize]) -> Result<f64> {
    if !probabilities.len().is_power_of_two() {
        return Err(Error::invalid("distribution length must be a power of two"));
    }
    let n = probabilities.len().trailing_zeros() as usize;
    check_partition(n, partition)?;
    let dim = 1usize << partition.len();
    let mut p = vec![0.0; dim];
    for (o, &q) in probabilities.iter().enumerate() {
        p[marginal_index(o as u64, partition)] += q;
    }
    let mut kp = p.clone();
    hamming_kernel(&mut kp);
    Ok(dim as f64 * p.iter().zip(&kp).map(|(a, b)| a * b).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::HamiltonianSpec;

    #[test]
    fn kernel_matches_explicit_weights() {
        let mut v: Vec<f64> = (0..8).map(|i| (i as f64 * 0.37).sin()).collect();
        let orig = v.clone();
        hamming_kernel(&mut v);
        for a in 0..8usize {
            let direct: f64 = (0..8usize).map(|b| (-0.5f64).powi((a ^ b).count_ones() as i32) * orig[b]).sum();
            assert!((v[a] - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn definite_outcome_weighs_the_full_subsystem_dimension() {
        let mut p = vec![0.0; 16];
        p[0b0101] = 1.0;
        for part in [vec![1], vec![2, 3], vec![1, 2, 3, 4]] {
            let expect = (1usize << part.len()) as f64;
            assert!((purity_from_probabilities(&p, &part).unwrap() - expect).abs() < 1e-14);
        }
        // even single-qubit marginal: 2 * (1/4 + 1/4 - 2 * 1/8) = 1/2
        let u = vec![0.5, 0.5];
        assert!((purity_from_probabilities(&u, &[1]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn haar_average_recovers_pure_and_mixed_purities() {
        use crate::protocol::LocalUnitarySet;
        use crate::spin::{born_probabilities, MeasurementBasis, SpinBasisState, StateVector};
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let k0 = SpinBasisState::zeros(2);
        let k1 = SpinBasisState::from_index(2, 0b11);
        let draws = 20_000;
        let (mut pure_full, mut pure_one, mut mixed_one) = (0.0, 0.0, 0.0);
        for i in 0..draws {
            let u = LocalUnitarySet::sample(2, i, &mut rng);
            let p0 = born_probabilities(&StateVector::rotated_product(&k0, &u.unitaries).unwrap(), MeasurementBasis::Z);
            let p1 = born_probabilities(&StateVector::rotated_product(&k1, &u.unitaries).unwrap(), MeasurementBasis::Z);
            pure_full += purity_from_probabilities(&p0, &[1, 2]).unwrap();
            pure_one += purity_from_probabilities(&p0, &[2]).unwrap();
            // equal mixture of |00> and |11>: each qubit maximally mixed
            let mix: Vec<f64> = p0.iter().zip(&p1).map(|(a, b)| 0.5 * (a + b)).collect();
            mixed_one += purity_from_probabilities(&mix, &[1]).unwrap();
        }
        let n = draws as f64;
        assert!((pure_full / n - 1.0).abs() < 0.03, "{}", pure_full / n);
        assert!((pure_one / n - 1.0).abs() < 0.02, "{}", pure_one / n);
        assert!((-(mixed_one / n).log2() - 1.0).abs() < 0.05, "{}", mixed_one / n);
    }

    #[test]
    fn count_estimator_is_unbiased_on_hand_example() {
        // counts 3 x '0', 1 x '1' on one qubit; pairs: same 3*2 = 6, differing 2*3*1 = 6
        let counts = BTreeMap::from([(0u64, 3u32), (1, 1)]);
        let expect = 2.0 * (6.0 - 0.5 * 6.0) / 12.0;
        assert!((purity_from_counts(&counts, &[1]) - expect).abs() < 1e-15);
    }

    fn metadata() -> ZBasisMetadata {
        ZBasisMetadata {
            code_version: "test".into(),
            seed: 3,
            n_unitaries: 2,
            shots: 4,
            hamiltonian: HamiltonianSpec::from_hz(3, 30.0, 1.2, 1500.0).unwrap(),
            times: vec![0.0, 2e-3],
            noise: None,
            config: serde_json::Value::Null,
        }
    }

    #[test]
    fn csv_round_trip() {
        let recs = vec![
            ZBasisRecord::from_outcomes(1, 2e-3, &[0b001, 0b001, 0b110, 0b111]),
            ZBasisRecord::from_outcomes(0, 0.0, &[0, 0, 0, 0b100]),
        ];
        let z = ZBasisRecords::new(metadata(), recs).unwrap();
        let text = z.to_csv_string();
        assert!(text.contains("\n0,0,001,1\n"));
        assert!(text.contains("\n1,0.002,100,2\n"));
        assert_eq!(ZBasisRecords::from_csv_str(&text).unwrap(), z);
        assert!(ZBasisRecords::from_csv_str(&text.replace("001,1", "0011,1")).is_err());
    }

    #[test]
    fn non_positive_purity_is_an_error() {
        // one shot of each outcome: 2 * (1 - 2) / 2 = -1
        let recs = vec![
            ZBasisRecord::from_outcomes(0, 0.0, &[0, 1]),
            ZBasisRecord::from_outcomes(1, 0.0, &[0, 1]),
        ];
        let z = ZBasisRecords::new(metadata(), recs).unwrap();
        assert!(z.purities(0.0, &[1]).unwrap().iter().all(|&p| p < 0.0));
        assert!(matches!(z.renyi_entropy(0.0, &[1]), Err(Error::InsufficientStatistics(_))));
        assert!(z.renyi_entropy(0.0, &[1, 1]).is_err());
    }
}
