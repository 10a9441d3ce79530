//! Manufactured solutions, error norms, convergence studies and the energy
//! experiment.

pub mod mms;
pub mod study;

pub use mms::{
    magnetic_jacobian, magnetic_profile, pressure_profile, velocity_jacobian, velocity_profile, InitialVortex,
    ManufacturedSolution,
};
pub use study::{
    l2_error, observed_order, run_energy_study, run_mms, run_spatial_study, run_temporal_study, thread_pool,
    ConvergenceTable, EnergyRow, EnergySeries, MmsCase, MmsResult, StudyKind, TableRow,
};
