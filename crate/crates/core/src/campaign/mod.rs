//! Campaign orchestration: configuration, seeded parallel execution,
//! persistence and reports.

pub mod config;
pub mod entropy;
pub mod otoc;
pub mod report;
pub mod tools;

use std::io::Write;
use std::path::Path;

pub use config::CampaignConfig;
pub use entropy::{run_entropy_campaign, simulate_zbasis, EntropyTable};
pub use otoc::{run_otoc_campaign, simulate_dataset};
pub use report::{analyze_dataset, write_otoc_report, AnalysisOptions, OtocReport};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Worker threads; all cores when `None`. Never changes the results.
    pub workers: Option<usize>,
    /// Continue from an existing dataset in the output directory.
    pub resume: bool,
    /// Only simulate unitary indices below this bound.
    pub unitary_limit: Option<u32>,
    pub checkpoint_every: u32,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { workers: None, resume: false, unitary_limit: None, checkpoint_every: 50 }
    }
}

impl RunOptions {
    pub(crate) fn limit(&self, n_unitaries: u32) -> u32 {
        self.unitary_limit.map_or(n_unitaries, |l| l.min(n_unitaries))
    }
}

/// Writes through a temporary sibling and renames, so readers never observe
/// a half-written file.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> crate::Result<()> {
    let tmp = path.with_extension("partial");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}
