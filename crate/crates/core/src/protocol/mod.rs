//! Randomized-measurement protocol: local CUE unitaries, the initial-state
//! families, simulated measurement branches, persisted datasets and the
//! estimators built on them.

mod branch;
mod cue;
pub mod dataset;
pub mod estimators;
pub mod renyi;
mod states;

pub use branch::{prepare_state, readout_x, run_branch, Branch, Readout};
pub use cue::{sample_cue_unitary, LocalUnitarySet};
pub use dataset::{DatasetMetadata, MeasurementDataset, MeasurementRecord};
pub use estimators::{
    estimate_modified_otoc, estimate_second_moment, OtocEstimator, OtocPoint, OtocSeries, SecondMoment,
    SiteSelection, SiteSeries,
};
pub use renyi::{estimate_renyi_entropy, RenyiEstimate, ZBasisMetadata, ZBasisRecord, ZBasisRecords};
pub use states::{enumerate_initial_states, hamming_weight, InitialStateFamily};
