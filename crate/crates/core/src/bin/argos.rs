use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use argos::harness::{self, output_dir, ScenarioConfig, SweepConfig};
use argos::{Error, Result};

/// Head-to-head racing simulator with runtime trace verification.
#[derive(Parser)]
#[command(name = "argos", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one race and write its log, odometry and summary.
    Race {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sweep one config field over a list of values.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Dotted config path, e.g. `initial_gap` or `rules.boost_grant`.
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        seeds: u32,
    },
    /// Re-verify an event log; prints the verdict as JSON.
    Verify { log: PathBuf },
    /// Print the trace-diagram report for a run directory.
    Report { dir: PathBuf },
}

fn race(config: &Path, seed: Option<u64>) -> Result<bool> {
    let mut cfg = ScenarioConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let dir = output_dir(format!("runs/{}-seed{}", cfg.name, cfg.seed));
    let (art, summary) = match harness::run_race(&cfg, &dir) {
        Err(e @ Error::Invariant(_)) => {
            let _ = std::fs::create_dir_all(&dir);
            let _ = std::fs::write(dir.join("invariant_dump.txt"), format!("{e}\n\nconfig:\n{}", cfg.to_toml_string()));
            return Err(e);
        }
        other => other?,
    };
    for c in &summary.cars {
        let k = &c.counters;
        println!("{}: {} laps, {} overtakes / {} attempts, {} held / {} blocks", c.name, c.laps, k.n_ot3, k.n_ot2, k.n_df3, k.n_df2);
    }
    println!("violations: {}  min clearance: {:.2} m", summary.violations.len(), summary.min_clearance);
    println!("verdict: {}  ({})", if summary.passed() { "PASS" } else { "FAIL" }, art.dir.display());
    Ok(summary.passed())
}

fn sweep(config: &Path, axis: String, values: Vec<f64>, seeds: u32) -> Result<bool> {
    let base = ScenarioConfig::load(config)?;
    let dir = output_dir(format!("runs/sweep-{}", base.name));
    let rows = harness::run_sweep(&SweepConfig { base, axis: axis.clone(), values, seeds_per_value: seeds })?;
    let csv = harness::sweep_csv(&rows);
    std::fs::create_dir_all(&dir)?;
    let file = dir.join(format!("{}.csv", axis.replace('.', "_")));
    std::fs::write(&file, &csv)?;
    print!("{csv}");
    eprintln!("wrote {}", file.display());
    Ok(true)
}

fn verify(log: &Path) -> Result<bool> {
    let text = std::fs::read_to_string(log)?;
    let parsed = harness::parse_log(&text)?;
    let verdict = harness::verify_log_text(&text)?;
    println!("{}", serde_json::to_string_pretty(&verdict).expect("verdict serializes"));
    if let Some(bad) = &verdict.first_invalid {
        if let Some(k) = parsed.trace.iter().position(|e| e == bad) {
            eprintln!("{}:{}: invalid state combination for car {} at t={}", log.display(), parsed.trace_lines[k], bad.car, bad.t);
        }
    }
    for c in &verdict.counterexamples {
        let seq: Vec<String> = c.sequence.iter().map(ToString::to_string).collect();
        eprintln!("counterexample car {} t={}: {}", c.car, c.t, seq.join(" "));
    }
    Ok(verdict.passed())
}

fn report(dir: &Path) -> Result<bool> {
    let r = harness::report(dir)?;
    print!("{}", r.to_text());
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&r).expect("report serializes"))?;
    Ok(r.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Race { config, seed } => race(&config, seed),
        Cmd::Sweep { config, axis, values, seeds } => sweep(&config, axis, values, seeds),
        Cmd::Verify { log } => verify(&log),
        Cmd::Report { dir } => report(&dir),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
