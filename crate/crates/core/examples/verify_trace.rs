//! Runs a short race, then re-verifies its log and shows what a tampered
//! line does to the verdict.

use argos::harness::{simulate, verify_log_text, ScenarioConfig};

fn main() -> argos::Result<()> {
    let config = ScenarioConfig { laps: 1, initial_gap: 27.5, ..ScenarioConfig::default() };
    let out = simulate(&config)?;
    let verdict = verify_log_text(&out.log)?;
    println!("clean log: passed {}, counters {:?}", verdict.passed(), verdict.counters);

    // Swap the first maneuver tag for a combination outside the valid table.
    let tampered: String = out
        .log
        .lines()
        .map(|l| if l.contains("\"argos\":\"wait\"") { l.replacen("\"autopass\":\"disarm\"", "\"autopass\":\"pass\"", 1) } else { l.to_string() })
        .collect::<Vec<_>>()
        .join("\n");
    match verify_log_text(&tampered) {
        Ok(v) => println!("tampered log: passed {}, first invalid {:?}", v.passed(), v.first_invalid),
        Err(e) => println!("tampered log rejected: {e}"),
    }
    Ok(())
}
