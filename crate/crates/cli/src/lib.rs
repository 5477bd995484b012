//! Scenario configuration, pipeline orchestration and rendering for the `overwatch`
//! command.

pub mod error;
pub mod pipeline;
pub mod scenario;

pub use error::CliError;
pub use pipeline::{run_pipeline, write_outputs, PipelineOutput};
pub use scenario::Scenario;

/// Seed from `OVERWATCH_SEED` when set, the scenario's otherwise.
pub fn effective_seed(s: &Scenario) -> Result<u64, CliError> {
    match std::env::var("OVERWATCH_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|e| CliError::validation("scenario", format!("OVERWATCH_SEED: {e}"))),
        Err(_) => Ok(s.seed),
    }
}
