//! Renyi-entropy campaign: a fixed random product state is quenched, then
//! read out in the z basis after fresh local random unitaries.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{CampaignConfig, EntropyConfig};
use super::otoc::thread_pool;
use super::report::provenance_header;
use super::{write_atomic, RunOptions, CODE_VERSION};
use crate::noise::{dephase_in_place, sample_phase, SPIN_ANGLE_PER_TRANSITION_PHASE};
use crate::protocol::{LocalUnitarySet, ZBasisMetadata, ZBasisRecord, ZBasisRecords};
use crate::rng::{cell_id, stream, Purpose};
use crate::spin::{apply_local_in_place, sample_index, sample_many, Propagator, SpinBasisState, StateVector, C64};
use crate::{Error, Result};

/// The campaign's initial state `(x)_i u_i |0>`, fixed by the seed.
pub fn entropy_initial_state(seed: u64, n_spins: usize) -> Result<StateVector> {
    let init = LocalUnitarySet::sample(n_spins, 0, &mut stream(seed, Purpose::InitialState, 0, 0));
    StateVector::rotated_product(&SpinBasisState::zeros(n_spins), &init.unitaries)
}

fn entropy_section(cfg: &CampaignConfig) -> EntropyConfig {
    cfg.entropy.clone().unwrap_or_default()
}

/// Evolved states `psi(t)` on the entropy time grid.
pub fn entropy_states(cfg: &CampaignConfig) -> Result<Vec<StateVector>> {
    let spec = cfg.hamiltonian_spec()?;
    let psi0 = entropy_initial_state(cfg.seed, spec.n_spins)?;
    let times: Vec<f64> = entropy_section(cfg).times_ms.iter().map(|t| t / 1000.0).collect();
    Ok(Propagator::from_spec(&spec)?.evolve_many(&[psi0], &times)?.remove(0))
}

pub fn simulate_zbasis(cfg: &CampaignConfig, opts: &RunOptions) -> Result<ZBasisRecords> {
    cfg.validate()?;
    let ent = entropy_section(cfg);
    let spec = cfg.hamiltonian_spec()?;
    let n = spec.n_spins;
    let noise = cfg.noise_spec()?;
    let times: Vec<f64> = ent.times_ms.iter().map(|t| t / 1000.0).collect();
    let states = entropy_states(cfg)?;
    let shots = ent.shots as usize;

    let unit = |r: u32| -> Vec<ZBasisRecord> {
        let readout = LocalUnitarySet::sample(n, r as u64, &mut stream(cfg.seed, Purpose::ReadoutUnitary, r as u64, 0));
        let rotate = |amps: &mut [C64]| {
            for (i, m) in readout.unitaries.iter().enumerate() {
                apply_local_in_place(amps, i + 1, m);
            }
        };
        times
            .iter()
            .zip(&states)
            .enumerate()
            .map(|(ti, (&t, psi))| {
                let mut rng = stream(cfg.seed, Purpose::EntropyShots, r as u64, cell_id(ti, false, 0));
                let mut amps: Vec<C64> = psi.amplitudes().iter().copied().collect();
                let outcomes: Vec<u64> = match &noise {
                    None => {
                        rotate(&mut amps);
                        let probs: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
                        sample_many(&probs, shots, &mut rng)
                    }
                    Some(spec) => {
                        let mut probs = vec![0.0; amps.len()];
                        (0..shots)
                            .map(|_| {
                                let phase = sample_phase(spec, t, &mut rng);
                                amps.clear();
                                amps.extend(psi.amplitudes().iter());
                                dephase_in_place(&mut amps, n, SPIN_ANGLE_PER_TRANSITION_PHASE * phase);
                                rotate(&mut amps);
                                for (p, a) in probs.iter_mut().zip(&amps) {
                                    *p = a.norm_sqr();
                                }
                                sample_index(&probs, &mut rng) as u64
                            })
                            .collect()
                    }
                };
                ZBasisRecord::from_outcomes(r, t, &outcomes)
            })
            .collect()
    };
    let pool = thread_pool(opts.workers)?;
    let units: Vec<u32> = (0..opts.limit(ent.n_unitaries)).collect();
    let records: Vec<ZBasisRecord> =
        pool.install(|| units.par_iter().map(|&r| unit(r)).collect::<Vec<_>>()).into_iter().flatten().collect();
    let metadata = ZBasisMetadata {
        code_version: CODE_VERSION.into(),
        seed: cfg.seed,
        n_unitaries: ent.n_unitaries,
        shots: ent.shots,
        hamiltonian: spec,
        times,
        noise,
        config: cfg.echo(),
    };
    ZBasisRecords::new(metadata, records)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyRow {
    pub t_s: f64,
    pub partition: Vec<usize>,
    pub entropy: Option<f64>,
    pub std_error: Option<f64>,
    pub purity: Option<f64>,
    pub purity_error: Option<f64>,
    /// `ok` or the reason no entropy could be formed.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyTable {
    pub code_version: String,
    pub config: serde_json::Value,
    pub rows: Vec<EntropyRow>,
}

impl EntropyTable {
    pub fn get(&self, t_s: f64, partition: &[usize]) -> Option<&EntropyRow> {
        self.rows.iter().find(|r| r.t_s == t_s && r.partition == partition)
    }
}

pub fn entropy_table(records: &ZBasisRecords, partitions: &[Vec<usize>]) -> Result<EntropyTable> {
    let mut rows = Vec::new();
    for &t in &records.metadata().times {
        for part in partitions {
            let purity = records.purity(t, part)?;
            let row = match records.renyi_entropy(t, part) {
                Ok(e) => EntropyRow {
                    t_s: t,
                    partition: part.clone(),
                    entropy: Some(e.entropy),
                    std_error: Some(e.std_error),
                    purity: Some(purity.value),
                    purity_error: Some(purity.std_error),
                    status: "ok".into(),
                },
                Err(Error::InsufficientStatistics(msg)) => EntropyRow {
                    t_s: t,
                    partition: part.clone(),
                    entropy: None,
                    std_error: None,
                    purity: Some(purity.value),
                    purity_error: Some(purity.std_error),
                    status: format!("insufficient statistics: {msg}"),
                },
                Err(e) => return Err(e),
            };
            rows.push(row);
        }
    }
    Ok(EntropyTable { code_version: CODE_VERSION.into(), config: records.metadata().config.clone(), rows })
}

#[derive(Debug)]
pub struct EntropyCampaignOutcome {
    pub records: ZBasisRecords,
    pub table: EntropyTable,
}

/// Writes `zbasis.csv`, `entropy.csv` and `entropy_summary.json`.
pub fn run_entropy_campaign(cfg: &CampaignConfig, dir: &Path, opts: &RunOptions) -> Result<EntropyCampaignOutcome> {
    std::fs::create_dir_all(dir)?;
    let records = simulate_zbasis(cfg, opts)?;
    let partitions = entropy_section(cfg).resolve_partitions(records.n_spins())?;
    let table = entropy_table(&records, &partitions)?;
    write_atomic(&dir.join("zbasis.csv"), records.to_csv_string().as_bytes())?;

    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = format!("{}t_s,partition,n_sites,entropy,std_error,purity,purity_error,status\n", provenance_header(&table.config));
    for r in &table.rows {
        let label: Vec<String> = r.partition.iter().map(|s| s.to_string()).collect();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.t_s,
            label.join(" "),
            r.partition.len(),
            opt(r.entropy),
            opt(r.std_error),
            opt(r.purity),
            opt(r.purity_error),
            r.status.replace(',', ";")
        )
        .expect("string write");
    }
    write_atomic(&dir.join("entropy.csv"), out.as_bytes())?;
    let json = serde_json::to_string_pretty(&table).expect("table serializes");
    write_atomic(&dir.join("entropy_summary.json"), json.as_bytes())?;
    Ok(EntropyCampaignOutcome { records, table })
}
