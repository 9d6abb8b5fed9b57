//! Scenario-driven front end for the multiband radar simulator: config
//! parsing, experiment drivers and artifact writers.

#![allow(clippy::result_large_err, clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{build_scenario, parse_config, Experiment, Overrides, Scenario, ScenarioConfig};
pub use error::{CliError, ErrorKind};
pub use run::{run, Results, RunReport};

/// Reads, parses and validates a scenario file.
pub fn load(path: &std::path::Path, strict: bool, ov: &Overrides) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file = path.display().to_string();
    let cfg = parse_config(&text, &file, strict)?;
    build_scenario(cfg, ov, &text, &file)
}
