//! Races the framework car against a raceline-only mule and writes the run
//! artifacts to the output directory.

use argos::harness::{output_dir, run_race, Policy, ScenarioConfig};

fn main() -> argos::Result<()> {
    let mut config = ScenarioConfig { name: "mule-demo".into(), laps: 2, seed: 3, ..ScenarioConfig::default() };
    config.cars[1].policy = Policy::Mule;
    config.cars[1].speed_scale = 0.95;
    let dir = output_dir("runs/mule-demo");
    let (artifacts, summary) = run_race(&config, &dir)?;
    println!("wrote {}", artifacts.dir.display());
    for car in &summary.cars {
        println!("{:<6} laps {} boost {:.1} s, counters {:?}", car.name, car.laps, car.boost_used, car.counters);
    }
    println!("min clearance {:.2} m, violations {}, verdict passed {}", summary.min_clearance, summary.violations.len(), summary.passed());
    Ok(())
}
