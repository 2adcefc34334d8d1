//! The two-branch OTOC measurement campaign.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::CampaignConfig;
use super::report::{analyze_dataset, write_otoc_report, AnalysisOptions, OtocReport};
use super::{write_atomic, RunOptions, CODE_VERSION};
use crate::noise::NoiseSpec;
use crate::protocol::{
    enumerate_initial_states, prepare_state, readout_x, Branch, DatasetMetadata, LocalUnitarySet, MeasurementDataset,
    MeasurementRecord, Readout,
};
use crate::rng::{cell_id, stream, Purpose};
use crate::spin::{LocalOperator, Propagator, SpinBasisState};
use crate::{Error, Result};

pub const DATASET_CSV: &str = "dataset.csv";
pub const DATASET_JSON: &str = "dataset.json";

/// Everything shared by the per-unitary work units.
struct Context {
    seed: u64,
    n_spins: usize,
    prop: Propagator,
    initial_states: Vec<SpinBasisState>,
    v: LocalOperator,
    w_sites: Vec<usize>,
    times: Vec<f64>,
    readouts: Vec<Readout>,
    noise: Option<NoiseSpec>,
}

impl Context {
    fn new(cfg: &CampaignConfig) -> Result<Self> {
        cfg.validate()?;
        let spec = cfg.hamiltonian_spec()?;
        Ok(Self {
            seed: cfg.seed,
            n_spins: spec.n_spins,
            prop: Propagator::from_spec(&spec)?,
            initial_states: enumerate_initial_states(spec.n_spins, cfg.order)?.states,
            v: LocalOperator::pauli(cfg.v.site, cfg.v.pauli),
            w_sites: cfg.w_sites(),
            times: cfg.times_s(),
            readouts: cfg.times_ms.iter().map(|&t| cfg.readout_at(t)).collect(),
            noise: cfg.noise_spec()?,
        })
    }

    /// All records of one unitary index: `2^n` plain branches and the
    /// `V` branch at every time.
    fn simulate_unitary(&self, index: u32) -> Result<Vec<MeasurementRecord>> {
        let u = index as u64;
        let uset = LocalUnitarySet::sample(self.n_spins, u, &mut stream(self.seed, Purpose::LocalUnitary, u, 0));
        let mut states = self
            .initial_states
            .iter()
            .map(|k| prepare_state(&uset, k, None))
            .collect::<Result<Vec<_>>>()?;
        states.push(prepare_state(&uset, &self.initial_states[0], Some(&self.v))?);
        let evolved = self.prop.evolve_many(&states, &self.times)?;

        let n_plain = self.initial_states.len();
        let mut records = Vec::with_capacity(states.len() * self.times.len());
        for (ti, &t) in self.times.iter().enumerate() {
            for (si, per_time) in evolved.iter().enumerate() {
                let (branch, state_id) = if si == n_plain { (Branch::VApplied, 0) } else { (Branch::Plain, si) };
                let cell = cell_id(ti, branch == Branch::VApplied, state_id);
                let mut rng = stream(self.seed, Purpose::Shots, u, cell);
                let all = readout_x(&per_time[ti], t, self.readouts[ti], self.noise.as_ref(), &mut rng)?;
                records.push(MeasurementRecord {
                    unitary_index: index,
                    branch,
                    state_id: state_id as u32,
                    t_s: t,
                    shots: self.readouts[ti].shots(),
                    estimates: self.w_sites.iter().map(|&j| all[j - 1]).collect(),
                });
            }
        }
        Ok(records)
    }
}

pub fn dataset_metadata(cfg: &CampaignConfig) -> Result<DatasetMetadata> {
    Ok(DatasetMetadata {
        code_version: CODE_VERSION.into(),
        seed: cfg.seed,
        n_unitaries: cfg.n_unitaries,
        order: cfg.order,
        hamiltonian: cfg.hamiltonian_spec()?,
        v_site: cfg.v.site,
        v_pauli: cfg.v.pauli,
        w_sites: cfg.w_sites(),
        times: cfg.times_s(),
        noise: cfg.noise_spec()?,
        exact_expectation: cfg.exact_expectation,
        config: cfg.echo(),
    })
}

pub(crate) fn thread_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        b = b.num_threads(w);
    }
    b.build().map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

fn simulate_units(ctx: &Context, units: &[u32], pool: &rayon::ThreadPool) -> Result<Vec<MeasurementRecord>> {
    let per_unit: Vec<Vec<MeasurementRecord>> =
        pool.install(|| units.par_iter().map(|&u| ctx.simulate_unitary(u)).collect::<Result<Vec<_>>>())?;
    Ok(per_unit.into_iter().flatten().collect())
}

/// Runs the campaign in memory, without touching the file system.
pub fn simulate_dataset(cfg: &CampaignConfig, opts: &RunOptions) -> Result<MeasurementDataset> {
    let ctx = Context::new(cfg)?;
    let pool = thread_pool(opts.workers)?;
    let units: Vec<u32> = (0..opts.limit(cfg.n_unitaries)).collect();
    MeasurementDataset::new(dataset_metadata(cfg)?, simulate_units(&ctx, &units, &pool)?)
}

#[derive(Debug)]
pub struct OtocCampaignOutcome {
    pub dataset: MeasurementDataset,
    pub report: OtocReport,
    pub output_dir: PathBuf,
}

pub fn write_dataset(dataset: &MeasurementDataset, dir: &Path) -> Result<()> {
    write_atomic(&dir.join(DATASET_CSV), dataset.to_csv_string().as_bytes())?;
    write_atomic(&dir.join(DATASET_JSON), dataset.to_json_string().as_bytes())
}

/// Runs (or resumes) the campaign, persisting a checkpoint after every
/// `checkpoint_every` unitaries, then writes the analysis report.
pub fn run_otoc_campaign(cfg: &CampaignConfig, dir: &Path, opts: &RunOptions) -> Result<OtocCampaignOutcome> {
    let ctx = Context::new(cfg)?;
    let metadata = dataset_metadata(cfg)?;
    std::fs::create_dir_all(dir)?;

    let existing_path = dir.join(DATASET_CSV);
    let mut dataset = if opts.resume && existing_path.exists() {
        let previous = MeasurementDataset::read(&existing_path)?;
        if previous.metadata() != &metadata {
            return Err(Error::ResumeMismatch(format!(
                "{} was produced by a different configuration or seed",
                existing_path.display()
            )));
        }
        previous
    } else {
        MeasurementDataset::new(metadata.clone(), Vec::new())?
    };

    let done = dataset.unitary_indices();
    let todo: Vec<u32> = (0..opts.limit(cfg.n_unitaries)).filter(|u| !done.contains(u)).collect();
    let pool = thread_pool(opts.workers)?;
    for chunk in todo.chunks(opts.checkpoint_every.max(1) as usize) {
        let records = simulate_units(&ctx, chunk, &pool)?;
        dataset = dataset.merge(MeasurementDataset::new(metadata.clone(), records)?)?;
        write_dataset(&dataset, dir)?;
    }
    if todo.is_empty() {
        write_dataset(&dataset, dir)?;
    }

    let report = analyze_dataset(&dataset, &AnalysisOptions::default())?;
    write_otoc_report(&report, &dataset, dir)?;
    Ok(OtocCampaignOutcome { dataset, report, output_dir: dir.to_path_buf() })
}
