//! Declarative experiments: TOML configs, ensemble runners, and the CSV and
//! binary artifacts they leave behind.

pub mod analysis;
pub mod config;
pub mod experiments;
pub mod output;

pub use output::{read_sidecar, OutputWriter, Provenance};
pub use config::{ExperimentConfig, ExperimentKind, Sweep, SweepParameter};
pub use experiments::{
    run_eigen, run_experiment, write_eigen_outputs, write_outputs, EigenReport, Stat, SweepPoint,
    SweepResult,
};
