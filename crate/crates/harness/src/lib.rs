//! Configuration files, named scenarios, parallel parameter sweeps and
//! CSV/JSON output around `fracshear-core`.

pub mod config;
pub mod emit;
pub mod error;
pub mod scenario;
pub mod sweep;

pub use config::{parse_config, RunConfig};
pub use error::{HarnessError, Result};
pub use scenario::{run_scenario, ScenarioName, ScenarioSummary};
