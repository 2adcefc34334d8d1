//! Post-processing: resampling errors, optimization, interpolation, wavefront
//! fits, Hamiltonian calibration and convergence studies.

pub mod calibration;
pub mod convergence;
pub mod interp;
pub mod jackknife;
pub mod optimize;
pub mod velocity;

pub use calibration::{calibrate_hamiltonian, simulate_quench, CalibrationFit, CalibrationOptions, QuenchData};
pub use convergence::{convergence_study, modified_otoc_limit, ConvergenceTable};
pub use jackknife::{jackknife, jackknife_mean, jackknife_mean_map, jackknife_ratio, JackknifeEstimate};
pub use velocity::{fit_butterfly_velocity, CollapseFit, CrossingMethod};
