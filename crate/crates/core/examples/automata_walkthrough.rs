//! Feeds hand-written input frames to one automaton network and prints every
//! transition and the resulting state combination.

use argos::automata::{
    FlagColor, ForcedEvents, GuardConfig, InputFrame, ManeuverPlanner, Network, OhvWord, RaceFlag, TrajectoryTag, TriggerSet,
};
use argos::planner::{PlanSource, PlannerOutput};
use argos::track::Waypoint;

/// Always returns a one-point plan; enough to drive the automatons.
struct Straight;

fn plan(source: PlanSource) -> PlannerOutput {
    PlannerOutput { waypoints: vec![Waypoint { x: 0.0, y: 0.0, v: 45.0 }], source }
}

impl ManeuverPlanner for Straight {
    fn overtake(&mut self) -> Option<PlannerOutput> {
        Some(plan(PlanSource::Overtake))
    }
    fn defense(&mut self) -> Option<PlannerOutput> {
        Some(plan(PlanSource::Defense))
    }
    fn merge_behind(&mut self, source: PlanSource) -> PlannerOutput {
        plan(source)
    }
}

fn frame(color: FlagColor, gap: f64, leading: bool, intent: u8) -> InputFrame {
    InputFrame {
        ip0: RaceFlag { color, velocity_limit: 60.0 },
        ip1: TrajectoryTag::Raceline,
        ip2: gap,
        ip3: leading,
        ip4: 20.0,
        ip5: OhvWord(intent),
        forced: ForcedEvents::default(),
    }
}

fn main() -> argos::Result<()> {
    use FlagColor::*;
    let mut net = Network::new(TriggerSet::default(), GuardConfig::default())?;
    let script = [
        ("green flag, far behind", frame(Green, 100.0, false, 0)),
        ("blue flag, inside follow window", frame(Blue, 27.0, false, 0)),
        ("still in window", frame(Blue, 27.0, false, 0)),
        ("closing", frame(Blue, 10.0, false, 0)),
        ("now ahead by 21 m", frame(Blue, -21.0, true, 0)),
        ("holding the lead", frame(Blue, -21.0, true, 0)),
        ("holding the lead", frame(Blue, -21.0, true, 0)),
        ("checkered", frame(Black, -40.0, true, 0)),
    ];
    for (label, f) in &script {
        let out = net.tick(f, &mut Straight)?;
        let fsc = out.fsc.map_or("invalid".to_string(), |t| t.to_string());
        println!("{label:<32} -> {fsc}  op0 {}", out.output.op0);
        for tr in &out.transitions {
            println!("    {}: {} -> {} via {:?}", tr.automaton, tr.from, tr.to, tr.guard);
        }
    }
    Ok(())
}
