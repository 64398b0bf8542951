//! Simulated tomography: sampled Pauli measurements, linear-inversion state
//! reconstruction with physical projection, single-qubit process matrices
//! and bootstrap error bars.

mod bootstrap;
mod qpt;
mod qst;

pub use bootstrap::{bootstrap_qpt, BootstrapConfig, BootstrapReport};
pub use qpt::{
    cptp_project, cptp_project_with, process_fidelity, qpt_chi, tp_map, ChiMatrix, CptpOptions,
    QPT_INPUTS,
};
pub use qst::{
    all_settings, born_distributions, cp_project, project_simplex, qst_linear_inversion,
    read_records_csv, sample_from_distributions, sample_measurements, write_records_csv,
    MeasurementRecord, Outcomes, PauliAxis, PauliSetting, Shots,
};
