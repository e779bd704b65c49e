//! Scenario runner: parses a scenario file, plans its tasks and writes
//! correlators, reports and a provenance record.

pub mod config;
pub mod report;
pub mod run;

pub use config::{load, parse, ConfigError, Plan, ScenarioConfig, Task, FORMAT, TOLERANCES};
pub use report::{Check, ComparisonReport, Summary};
pub use run::execute;
