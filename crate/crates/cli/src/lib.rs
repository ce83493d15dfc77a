//! Configuration, pipeline assembly, and run manifests for the command-line
//! front end. The binary and the acceptance tests both drive runs through
//! [`run_pipeline`].

pub mod config;
pub mod pipeline;

pub use config::{load_config, resolve, ConfigError, Resolved};
pub use pipeline::{run_pipeline, RunOutcome};
