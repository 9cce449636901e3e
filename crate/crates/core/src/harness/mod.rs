//! Scenario runner: config files, the closed loop, metrics, traces and the
//! canned figure suites.

pub mod config;
pub mod figures;
pub mod metrics;
pub mod sim;
pub mod trace;

pub use config::ScenarioConfig;
pub use metrics::{compute_metrics, compute_metrics_from_series, Metrics};
pub use sim::{run_scenario, SimTrace, TraceRow};
