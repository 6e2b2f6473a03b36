//! Command-line front end for `aoi_mpr`: scenario files in, CSV/JSON out.

pub mod commands;
pub mod output;
pub mod scenario;

pub use commands::{execute, run, CliError, Command, Format, Outcome, Overrides, Status};
pub use scenario::{parse_scenario, parse_scenario_str, Scenario, ScenarioError};
