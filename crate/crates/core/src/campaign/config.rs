//! TOML campaign configuration. Field names carry their units (`_hz`,
//! `_rad_per_s`, `_ms`, `_s`); angular quantities given in Hz are multiplied
//! by 2 pi.
//!
//! ```toml
//! seed = 7
//! n_unitaries = 500
//! order = 2
//! times_ms = [0, 1, 2, 3, 4, 5]
//!
//! [hamiltonian]
//! n_spins = 10
//! j0_hz = 30.13
//! alpha = 1.21
//! b_field_hz = 1500
//!
//! [v]
//! site = 1
//! pauli = "z"
//!
//! [shots]
//! default = 150
//! overrides = [{ from_ms = 4, shots = 300 }]
//!
//! [noise]            # omit for noiseless dynamics
//! white_std_hz = 120
//! ```

use std::f64::consts::TAU;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::noise::{NoiseSpec, PhasePolicy};
use crate::protocol::Readout;
use crate::spin::{HamiltonianSpec, Pauli};
use crate::{Error, Result};

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianConfig {
    pub n_spins: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j0_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j0_rad_per_s: Option<f64>,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_field_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_field_rad_per_s: Option<f64>,
    /// Count every pair twice (sum over `i != j`).
    #[serde(default)]
    pub double_count_pairs: bool,
}

fn angular(name: &str, hz: Option<f64>, rad: Option<f64>) -> Result<f64> {
    match (hz, rad) {
        (Some(h), None) => Ok(TAU * h),
        (None, Some(r)) => Ok(r),
        (None, None) => Err(config_err(format!("hamiltonian needs {name}_hz or {name}_rad_per_s"))),
        (Some(_), Some(_)) => Err(config_err(format!("give only one of {name}_hz and {name}_rad_per_s"))),
    }
}

impl HamiltonianConfig {
    pub fn to_spec(&self) -> Result<HamiltonianSpec> {
        let spec = HamiltonianSpec {
            n_spins: self.n_spins,
            j0: angular("j0", self.j0_hz, self.j0_rad_per_s)?,
            alpha: self.alpha,
            b_field: angular("b_field", self.b_field_hz, self.b_field_rad_per_s)?,
            double_count_pairs: self.double_count_pairs,
        };
        spec.validate().map_err(|e| config_err(e.to_string()))?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VConfig {
    pub site: usize,
    pub pauli: Pauli,
}

impl Default for VConfig {
    fn default() -> Self {
        Self { site: 1, pauli: Pauli::Z }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShotOverride {
    /// Applies to every time `>= from_ms`.
    pub from_ms: f64,
    pub shots: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShotSchedule {
    #[serde(default = "default_shots")]
    pub default: u32,
    #[serde(default = "default_overrides")]
    pub overrides: Vec<ShotOverride>,
}

fn default_shots() -> u32 {
    150
}

fn default_overrides() -> Vec<ShotOverride> {
    vec![ShotOverride { from_ms: 4.0, shots: 300 }]
}

impl Default for ShotSchedule {
    fn default() -> Self {
        Self { default: default_shots(), overrides: default_overrides() }
    }
}

impl ShotSchedule {
    pub fn shots_at(&self, t_ms: f64) -> u32 {
        self.overrides
            .iter()
            .filter(|o| t_ms >= o.from_ms)
            .max_by(|a, b| a.from_ms.total_cmp(&b.from_ms))
            .map_or(self.default, |o| o.shots)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default = "default_white_hz")]
    pub white_std_hz: f64,
    #[serde(default = "default_dt")]
    pub dt_s: f64,
    #[serde(default = "default_periodic_hz")]
    pub periodic_amplitude_hz: f64,
    #[serde(default = "default_periodic_frequency")]
    pub periodic_frequency_hz: f64,
    /// Fixed phase of the periodic component; random per shot when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_phase_rad: Option<f64>,
}

fn default_white_hz() -> f64 {
    120.0
}
fn default_dt() -> f64 {
    1e-4
}
fn default_periodic_hz() -> f64 {
    90.0
}
fn default_periodic_frequency() -> f64 {
    204.0
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            white_std_hz: default_white_hz(),
            dt_s: default_dt(),
            periodic_amplitude_hz: default_periodic_hz(),
            periodic_frequency_hz: default_periodic_frequency(),
            fixed_phase_rad: None,
        }
    }
}

impl NoiseConfig {
    pub fn to_spec(&self) -> Result<NoiseSpec> {
        let spec = NoiseSpec {
            white_std: TAU * self.white_std_hz,
            dt: self.dt_s,
            periodic_amplitude: TAU * self.periodic_amplitude_hz,
            periodic_frequency: self.periodic_frequency_hz,
            phase_policy: self.fixed_phase_rad.map_or(PhasePolicy::RandomPerShot, PhasePolicy::Fixed),
        };
        spec.validate().map_err(|e| config_err(e.to_string()))?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PartitionSpec {
    /// `"prefixes"`: `{1}, {1,2}, ..., {1..N}`.
    Named(String),
    Explicit(Vec<Vec<usize>>),
}

impl Default for PartitionSpec {
    fn default() -> Self {
        PartitionSpec::Named("prefixes".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyConfig {
    #[serde(default = "default_entropy_times")]
    pub times_ms: Vec<f64>,
    #[serde(default = "default_n_unitaries")]
    pub n_unitaries: u32,
    #[serde(default = "default_shots")]
    pub shots: u32,
    #[serde(default)]
    pub partitions: PartitionSpec,
}

fn default_entropy_times() -> Vec<f64> {
    vec![0.0, 2.0, 5.0]
}

impl Default for EntropyConfig {
    fn default() -> Self {
        Self {
            times_ms: default_entropy_times(),
            n_unitaries: default_n_unitaries(),
            shots: default_shots(),
            partitions: PartitionSpec::default(),
        }
    }
}

impl EntropyConfig {
    pub fn resolve_partitions(&self, n_spins: usize) -> Result<Vec<Vec<usize>>> {
        let parts = match &self.partitions {
            PartitionSpec::Named(name) if name == "prefixes" => (1..=n_spins).map(|k| (1..=k).collect()).collect(),
            PartitionSpec::Named(other) => return Err(config_err(format!("unknown partition set {other:?}"))),
            PartitionSpec::Explicit(p) => p.clone(),
        };
        for p in &parts {
            let mut sorted = p.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if p.is_empty() || sorted.len() != p.len() || sorted.iter().any(|&s| s == 0 || s > n_spins) {
                return Err(config_err(format!("invalid partition {p:?}")));
            }
        }
        Ok(parts)
    }
}

fn default_n_unitaries() -> u32 {
    500
}
fn default_order() -> usize {
    2
}
fn default_times_ms() -> Vec<f64> {
    vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub seed: u64,
    #[serde(default = "default_n_unitaries")]
    pub n_unitaries: u32,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default)]
    pub exact_expectation: bool,
    #[serde(default = "default_times_ms")]
    pub times_ms: Vec<f64>,
    /// Sites where `sigma^x` is read out; every site when absent.
    #[serde(default)]
    pub w_sites: Option<Vec<usize>>,
    pub hamiltonian: HamiltonianConfig,
    #[serde(default)]
    pub v: VConfig,
    #[serde(default)]
    pub shots: ShotSchedule,
    #[serde(default)]
    pub noise: Option<NoiseConfig>,
    #[serde(default)]
    pub entropy: Option<EntropyConfig>,
    /// Where outputs go; not part of the echoed configuration.
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
}

impl CampaignConfig {
    /// Parses, fills defaults (`w_sites`) and validates.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut cfg: CampaignConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Fills defaults and validates; call again after editing fields.
    pub fn resolve(&mut self) -> Result<()> {
        let spec = self.hamiltonian.to_spec()?;
        let n = spec.n_spins;
        if self.w_sites.is_none() {
            self.w_sites = Some((1..=n).collect());
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let spec = self.hamiltonian.to_spec()?;
        let n = spec.n_spins;
        check_times(&self.times_ms)?;
        if self.n_unitaries < 2 {
            return Err(config_err("n_unitaries must be >= 2"));
        }
        if self.order > n {
            return Err(config_err(format!("order {} exceeds {n} spins", self.order)));
        }
        let w = self.w_sites();
        if w.is_empty() || w.windows(2).any(|p| p[0] >= p[1]) || w.iter().any(|&s| s == 0 || s > n) {
            return Err(config_err("w_sites must be strictly increasing sites in 1..=n_spins"));
        }
        if self.v.site == 0 || self.v.site > n {
            return Err(config_err(format!("v.site {} out of range", self.v.site)));
        }
        if !self.exact_expectation {
            let mut all = vec![self.shots.default];
            all.extend(self.shots.overrides.iter().map(|o| o.shots));
            if all.contains(&0) {
                return Err(config_err("shot counts must be >= 1"));
            }
        }
        if self.shots.overrides.iter().any(|o| !o.from_ms.is_finite()) {
            return Err(config_err("shot override times must be finite"));
        }
        if let Some(noise) = &self.noise {
            noise.to_spec()?;
            if self.exact_expectation {
                return Err(config_err("exact_expectation cannot be combined with noise"));
            }
        }
        if let Some(e) = &self.entropy {
            check_times(&e.times_ms)?;
            if e.n_unitaries < 2 || e.shots < 2 {
                return Err(config_err("entropy campaigns need >= 2 unitaries and >= 2 shots"));
            }
            e.resolve_partitions(n)?;
        }
        Ok(())
    }

    pub fn hamiltonian_spec(&self) -> Result<HamiltonianSpec> {
        self.hamiltonian.to_spec()
    }

    pub fn noise_spec(&self) -> Result<Option<NoiseSpec>> {
        self.noise.as_ref().map(NoiseConfig::to_spec).transpose()
    }

    pub fn w_sites(&self) -> Vec<usize> {
        match &self.w_sites {
            Some(w) => w.clone(),
            None => (1..=self.hamiltonian.n_spins).collect(),
        }
    }

    pub fn times_s(&self) -> Vec<f64> {
        self.times_ms.iter().map(|t| t / 1000.0).collect()
    }

    pub fn readout_at(&self, t_ms: f64) -> Readout {
        if self.exact_expectation {
            Readout::Exact
        } else {
            Readout::Shots(self.shots.shots_at(t_ms))
        }
    }

    /// The resolved configuration as JSON, used as the provenance echo.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

fn check_times(times_ms: &[f64]) -> Result<()> {
    if times_ms.is_empty() {
        return Err(config_err("times_ms must not be empty"));
    }
    if times_ms.iter().any(|t| !t.is_finite() || *t < 0.0) || times_ms.windows(2).any(|w| w[1] <= w[0]) {
        return Err(config_err("times_ms must be finite, >= 0 and strictly increasing"));
    }
    Ok(())
}
