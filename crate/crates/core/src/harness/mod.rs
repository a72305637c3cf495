//! Experiment configuration, perturbation generation, run manifests and the
//! experiment drivers behind the command-line interface.

pub mod config;
pub mod manifest;
pub mod perturbation;
pub mod run;

pub use config::{Experiment, ExperimentConfig};
pub use manifest::{FileRecord, RunManifest};
pub use perturbation::{generate_perturbation, PerturbationKind, PerturbationSpec};
pub use run::{execute, exit_code, mass_sweep, run, MassSweep, Outcome};
