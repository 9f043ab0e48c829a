//! Command-line driver: configuration, run pipelines, verification and reports.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod presets;
pub mod report;
pub mod run;
pub mod verify;

use std::path::Path;

pub use config::RunConfig;
pub use error::CliError;

/// Loads `arg` as a file path, falling back to a built-in preset of that name.
pub fn resolve_config(arg: &str) -> Result<RunConfig, CliError> {
    let path = Path::new(arg);
    if path.exists() {
        return RunConfig::load(path);
    }
    match presets::get(arg) {
        Some(text) => RunConfig::parse(text),
        None => Err(CliError::Config(format!(
            "{arg} is neither a file nor a preset (presets: {})",
            presets::names().collect::<Vec<_>>().join(", ")
        ))),
    }
}
