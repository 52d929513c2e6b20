//! Scenario runner and I/O.

pub mod config;
pub mod output;
pub mod report;
pub mod scenarios;
pub mod sweep;

pub use config::{parse_sweep_param, AttractantInit, ScenarioConfig, ScenarioKind};
pub use output::write_outcome;
pub use report::{Check, Report, Verdict};
pub use scenarios::{certify, convergence_order, run_scenario, Outcome};
pub use sweep::{run_sweep, SweepPoint};
