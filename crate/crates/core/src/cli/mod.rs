//! Experiment harness behind the `beamdg` binary: config files, runs and
//! their CSV, SVG and JSON artifacts.

pub mod config;
pub mod output;
pub mod run;

pub use config::{ConfigError, ExperimentConfig, InitialData, TimeStep};
pub use output::{CONVERGENCE_HEADER, ENERGY_HEADER, SOLUTION_HEADER};
pub use run::{
    run_convergence, run_energy_history, run_solve, sample_solution, CaseRecord, EnergyHistory,
    RunOutput, RunRecord,
};
