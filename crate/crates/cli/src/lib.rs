//! Command-line driver for polarsim: scenario files in, CSV and JSON out.
//!
//! Each subcommand is a plain function here so that tests and the acceptance
//! harness can call it without spawning the binary.

pub mod config;
pub mod error;
pub mod germany;
pub mod output;
pub mod run;
pub mod sweep;
pub mod verify;

pub use config::{load_scenario, parse_config, ConfigError, Scenario, ScenarioConfig};
pub use error::CliError;
pub use germany::{germany, germany_report, GermanyReport};
pub use run::{simulate, staircase, thresholds, RunResult, RunSummary, Thresholds, VariantSummary};
pub use sweep::sweep;
pub use verify::{format_report, verify, VerifyOutcome};
