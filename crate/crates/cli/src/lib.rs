//! Experiment front end: reads a manifest, checks it against the grid of
//! meaningful cases, evaluates every SNR point and writes a CSV with a
//! metadata sidecar.

pub mod config;
pub mod error;
pub mod run;
pub mod validate;

pub use config::{Case, Dim, ExperimentConfig};
pub use error::CliError;
pub use run::{evaluate, run, sidecar_path, write_csv, Row, RunOutcome, CSV_HEADER};
pub use validate::{validate, Finding, Severity};
