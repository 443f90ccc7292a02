//! Sweeps the initial gap against a mule and prints the overtake probability
//! with its rank correlation.

use argos::harness::{kendall_tau, run_sweep, sweep_csv, Policy, ScenarioConfig, SweepConfig};

fn main() -> argos::Result<()> {
    let mut base = ScenarioConfig { laps: 2, gap_jitter: 5.0, ..ScenarioConfig::default() };
    base.cars[1].policy = Policy::Mule;
    base.cars[1].speed_scale = 0.95;
    let sweep = SweepConfig { base, axis: "initial_gap".into(), values: vec![40.0, 160.0, 640.0], seeds_per_value: 3 };
    let rows = run_sweep(&sweep)?;
    print!("{}", sweep_csv(&rows));
    let xs: Vec<f64> = rows.iter().map(|r| r.value).collect();
    let ps: Vec<f64> = rows.iter().map(|r| r.p_overtake).collect();
    println!("kendall tau {:.2}", kendall_tau(&xs, &ps));
    Ok(())
}
