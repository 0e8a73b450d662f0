//! Scenario runner for the one-phase Muskat simulator: configuration, run
//! orchestration, CSV and manifest output, and the acceptance checks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod config;
pub mod error;
pub mod output;
pub mod scenarios;
pub mod validate;

pub use config::{parse_config, Scenario, ScenarioConfig};
pub use error::RunError;
pub use scenarios::{execute, run_scenario, Finished};
