//! Experiment harness for SSC-OMP: synthetic sweeps, clustering of external
//! feature matrices and condition reports.

pub mod config;
pub mod error;
pub mod io;
pub mod run;

pub use config::{Algorithm, ArrangementKind, ExperimentConfig, Mode};
pub use error::{CliError, Result};
pub use run::{run_cluster, run_conditions, run_sweep};
