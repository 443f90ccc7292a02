//! On-disk run artifacts, log re-verification and reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::log::parse_log;
use super::race::{simulate, RaceSummary};
use crate::error::{Error, Result};
use crate::verification::{verify_session, Verdict};

/// Environment variable that overrides the output directory.
pub const OUT_DIR_ENV: &str = "ARGOS_OUT_DIR";

pub const EVENT_LOG: &str = "events.jsonl";
pub const ODOMETRY: &str = "odometry.csv";
pub const SUMMARY: &str = "summary.json";
pub const CONFIG: &str = "config.toml";

#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub event_log: PathBuf,
    pub odometry: PathBuf,
    pub summary: PathBuf,
}

/// `$ARGOS_OUT_DIR` when set, otherwise `default`.
pub fn output_dir(default: impl Into<PathBuf>) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => default.into(),
    }
}

/// Runs a race and writes its artifacts under `dir`.
pub fn run_race(config: &ScenarioConfig, dir: &Path) -> Result<(RunArtifacts, RaceSummary)> {
    let outcome = simulate(config)?;
    fs::create_dir_all(dir)?;
    let art = RunArtifacts {
        dir: dir.to_path_buf(),
        event_log: dir.join(EVENT_LOG),
        odometry: dir.join(ODOMETRY),
        summary: dir.join(SUMMARY),
    };
    fs::write(&art.event_log, &outcome.log)?;
    fs::write(&art.odometry, &outcome.odometry)?;
    fs::write(&art.summary, serde_json::to_string_pretty(&outcome.summary).expect("summary serializes"))?;
    fs::write(dir.join(CONFIG), config.to_toml_string())?;
    Ok((art, outcome.summary))
}

pub fn verify_log_text(text: &str) -> Result<Verdict> {
    let log = parse_log(text)?;
    Ok(verify_session(&log.trace, log.opportunities, log.full_framework()))
}

pub fn verify_log(path: &Path) -> Result<Verdict> {
    verify_log_text(&fs::read_to_string(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarReport {
    pub name: String,
    pub overtake_opportunities: u64,
    pub overtake_attempts: u64,
    pub overtakes: u64,
    pub abandons: u64,
    pub overtake_dnf: u64,
    pub defense_opportunities: u64,
    pub defense_attempts: u64,
    pub defenses_held: u64,
    pub fallbacks: u64,
    pub defense_dnf: u64,
    pub lap_times: Vec<f64>,
    pub boost_used: f64,
    pub violations: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub cars: Vec<CarReport>,
    pub passed: bool,
    pub conservation_ok: bool,
    /// Present when both cars ran the automaton network.
    pub cross_check_ok: Option<bool>,
    pub min_clearance: f64,
}

fn read(dir: &Path, name: &str) -> Result<String> {
    let path = dir.join(name);
    fs::read_to_string(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Trace-diagram counts and race statistics for a run directory. Counts come
/// from re-verifying the event log.
pub fn report(dir: &Path) -> Result<Report> {
    let verdict = verify_log_text(&read(dir, EVENT_LOG)?)?;
    let summary: RaceSummary = serde_json::from_str(&read(dir, SUMMARY)?).map_err(|e| Error::Config(format!("{SUMMARY}: {e}")))?;
    let cars = summary
        .cars
        .iter()
        .enumerate()
        .map(|(i, car)| {
            let c = verdict.counters.get(i).copied().unwrap_or_default();
            let mut violations = BTreeMap::new();
            for v in summary.violations.iter().filter(|v| v.car == i) {
                *violations.entry(format!("{:?}", v.rule)).or_insert(0) += 1;
            }
            CarReport {
                name: car.name.clone(),
                overtake_opportunities: c.n_ot1,
                overtake_attempts: c.n_ot2,
                overtakes: c.n_ot3,
                abandons: c.n_ot45,
                overtake_dnf: c.n_ot_dnf,
                defense_opportunities: c.n_df1,
                defense_attempts: c.n_df2,
                defenses_held: c.n_df3,
                fallbacks: c.n_df45,
                defense_dnf: c.n_df_dnf,
                lap_times: car.lap_times.clone(),
                boost_used: car.boost_used,
                violations,
            }
        })
        .collect();
    Ok(Report {
        cars,
        passed: verdict.passed(),
        conservation_ok: verdict.conservation_ok,
        cross_check_ok: verdict.cross_check_ok,
        min_clearance: summary.min_clearance,
    })
}

impl Report {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let rows: [(&str, fn(&CarReport) -> u64); 10] = [
            ("overtake opportunities", |c| c.overtake_opportunities),
            ("overtake attempts", |c| c.overtake_attempts),
            ("  completed", |c| c.overtakes),
            ("  abandoned", |c| c.abandons),
            ("  dnf", |c| c.overtake_dnf),
            ("defense opportunities", |c| c.defense_opportunities),
            ("defense attempts", |c| c.defense_attempts),
            ("  held", |c| c.defenses_held),
            ("  fell back", |c| c.fallbacks),
            ("  dnf", |c| c.defense_dnf),
        ];
        let _ = write!(out, "{:<24}", "");
        for c in &self.cars {
            let _ = write!(out, "{:>12}", c.name);
        }
        out.push('\n');
        for (label, f) in rows {
            let _ = write!(out, "{label:<24}");
            for c in &self.cars {
                let _ = write!(out, "{:>12}", f(c));
            }
            out.push('\n');
        }
        let _ = write!(out, "{:<24}", "laps");
        for c in &self.cars {
            let _ = write!(out, "{:>12}", c.lap_times.len());
        }
        out.push('\n');
        let _ = write!(out, "{:<24}", "best lap, s");
        for c in &self.cars {
            let best = c.lap_times.iter().copied().fold(f64::INFINITY, f64::min);
            let cell = if best.is_finite() { format!("{best:.2}") } else { "-".into() };
            let _ = write!(out, "{cell:>12}");
        }
        out.push('\n');
        let _ = write!(out, "{:<24}", "boost used, s");
        for c in &self.cars {
            let _ = write!(out, "{:>12.1}", c.boost_used);
        }
        out.push('\n');
        for c in &self.cars {
            for (rule, n) in &c.violations {
                let _ = writeln!(out, "{}: {n} x {rule}", c.name);
            }
        }
        let cross = match self.cross_check_ok {
            Some(true) => "ok",
            Some(false) => "FAILED",
            None => "n/a",
        };
        let _ = writeln!(out, "conservation {}  cross-check {cross}  min clearance {:.2} m", if self.conservation_ok { "ok" } else { "FAILED" }, self.min_clearance);
        let _ = writeln!(out, "verdict {}", if self.passed { "PASS" } else { "FAIL" });
        out
    }
}
