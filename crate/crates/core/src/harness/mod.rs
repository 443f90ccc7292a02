//! Scenario configuration, the race loop, sweeps, logs and reports.

pub mod artifacts;
pub mod config;
pub mod log;
pub mod planner;
pub mod race;
pub mod sweep;

pub use artifacts::{output_dir, report, run_race, verify_log, verify_log_text, Report, RunArtifacts, OUT_DIR_ENV};
pub use config::{CarConfig, Policy, ScenarioConfig, SweepConfig};
pub use log::{parse_log, LogEvent, ParsedLog};
pub use race::{simulate, CarSummary, RaceOutcome, RaceSummary};
pub use sweep::{kendall_tau, run_sweep, sweep_csv, SweepRow};
