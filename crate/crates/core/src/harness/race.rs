//! Deterministic lockstep race loop.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{CarConfig, Policy, ScenarioConfig};
use super::log::{parse_log, LogEvent};
use super::planner::{RacePlanner, Situation};
use crate::automata::{
    ArgosState, AutoPassState, FlagColor, FscTag, InputFrame, KavalState, Network, OhvWord, RaceFlag, Reference, Role, TrajectoryTag,
};
use crate::automata::network::OutputFrame;
use crate::error::{Error, Result};
use crate::planner::PlannerOutput;
use crate::race_control::{
    apply_observation_radius, boost_allowed, leader_flag, update_flag, CarView, Observation, OpponentEstimator, RaceControl, RaceProgress, Rule,
    Violation,
};
use crate::track::{build_oval_track, Track, Waypoint};
use crate::tracker::{RefPath, Tracker};
use crate::vehicle::{aems_drain, aems_lap_reset, speed_limit, step, AemsReservoir, Command, VehicleState};
use crate::verification::{verify_session, CounterSet, Verdict};

/// Reference window behind and ahead of the car, in samples.
const WINDOW_BACK: usize = 5;
const WINDOW_AHEAD: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarSummary {
    pub name: String,
    pub policy: Policy,
    pub laps: u32,
    pub lap_times: Vec<f64>,
    pub distance: f64,
    /// Boosted seconds used over the race.
    pub boost_used: f64,
    /// Boosted seconds spent outside the passing zones.
    pub boost_outside_zone: f64,
    /// Lowest boost budget seen at any tick, s.
    pub min_budget: f64,
    /// Ticks whose state triple had no valid tag.
    pub invalid_fsc_ticks: u64,
    pub counters: CounterSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaceSummary {
    pub name: String,
    pub seed: u64,
    pub ticks: u64,
    pub duration: f64,
    pub cars: Vec<CarSummary>,
    pub verdict: Verdict,
    pub violations: Vec<Violation>,
    /// Smallest footprint clearance seen, m.
    pub min_clearance: f64,
}

impl RaceSummary {
    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }
}

/// Everything a race produces, kept in memory.
#[derive(Debug, Clone)]
pub struct RaceOutcome {
    /// JSONL event log, newline-terminated.
    pub log: String,
    /// Odometry CSV sampled at the tracker rate.
    pub odometry: String,
    pub summary: RaceSummary,
}

struct Car {
    cfg: CarConfig,
    state: VehicleState,
    tracker: Tracker,
    aems: AemsReservoir,
    network: Option<Network>,
    estimator: OpponentEstimator,
    progress: RaceProgress,
    n: f64,
    command: Command,
    output: OutputFrame,
    /// Plan the current reference was cut from, and the last matched index.
    plan_hint: Option<(Arc<PlannerOutput>, usize)>,
    last_fsc: Option<Option<FscTag>>,
    boost_requested: bool,
    boost_denied: bool,
    lap_start: f64,
    lap_times: Vec<f64>,
    boost_used: f64,
    boost_outside_zone: f64,
    min_budget: f64,
    invalid_fsc_ticks: u64,
    refresh: bool,
}

fn global_output() -> OutputFrame {
    OutputFrame { op0: OhvWord::NONE, op1: Reference::Global, op2: Reference::Global }
}

fn with_context(e: Error, t: f64, car: usize) -> Error {
    match e {
        Error::Invariant(m) => Error::Invariant(format!("t={t:.2} car {car}: {m}")),
        other => other,
    }
}

/// Index of the plan sample closest to `q`, searched around `hint`.
fn nearest_index(wps: &[Waypoint], q: crate::Point, hint: Option<usize>) -> usize {
    let (lo, hi) = match hint {
        Some(h) => (h.saturating_sub(20), (h + 60).min(wps.len())),
        None => (0, wps.len()),
    };
    (lo..hi)
        .min_by(|&a, &b| wps[a].pos().dist(q).total_cmp(&wps[b].pos().dist(q)))
        .unwrap_or(0)
}

struct Race<'a> {
    cfg: &'a ScenarioConfig,
    track: Track,
    cars: [Car; 2],
    control: RaceControl,
    leader: usize,
    flags: [RaceFlag; 2],
    log: Vec<String>,
    odometry: String,
    violations: Vec<Violation>,
}

impl<'a> Race<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let track = build_oval_track(&cfg.track)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut jitter = |span: f64| if span > 0.0 { rng.gen_range(-span..=span) } else { 0.0 };
        let gap = cfg.initial_gap + jitter(cfg.gap_jitter);
        let laterals = [jitter(cfg.lateral_jitter), jitter(cfg.lateral_jitter)];
        let rl = &track.raceline;
        let make = |i: usize| -> Result<Car> {
            let c = cfg.cars[i].clone();
            let s = rl.wrap_s(cfg.start_s + if i == cfg.starting_leader { gap } else { 0.0 });
            let p = rl.from_frenet(s, laterals[i]);
            let state = VehicleState { x: p.x, y: p.y, phi: rl.heading_at(s), v: rl.speed_at(s) * c.speed_scale };
            let network = match c.policy {
                Policy::Argos => Some(Network::new(c.triggers, cfg.guards)?),
                Policy::Mule => None,
            };
            Ok(Car {
                tracker: Tracker::new(c.tracker.clone())?,
                aems: AemsReservoir::new(cfg.rules.boost_grant),
                network,
                estimator: OpponentEstimator::new(cfg.estimator.clone()),
                progress: RaceProgress { laps: 0, arc_s: s, distance: 0.0 },
                n: laterals[i],
                command: Command::default(),
                output: global_output(),
                plan_hint: None,
                last_fsc: None,
                boost_requested: false,
                boost_denied: false,
                lap_start: 0.0,
                lap_times: Vec::new(),
                boost_used: 0.0,
                boost_outside_zone: 0.0,
                min_budget: f64::INFINITY,
                invalid_fsc_ticks: 0,
                refresh: true,
                state,
                cfg: c,
            })
        };
        let cars = [make(0)?, make(1)?];
        Ok(Self {
            control: RaceControl::new(cfg.rules.clone())?,
            leader: cfg.starting_leader,
            flags: [RaceFlag { color: FlagColor::Green, velocity_limit: cfg.flag_velocity_limit }; 2],
            log: Vec::new(),
            odometry: String::from("t,car,x,y,phi,v,s,n,lap,budget\n"),
            violations: Vec::new(),
            cfg,
            track,
            cars,
        })
    }

    fn emit(&mut self, ev: LogEvent) {
        self.log.push(ev.to_line());
    }

    /// Automaton step for car `i` against the previous-tick snapshot.
    fn decide(&mut self, i: usize, t: f64, snap: &[(VehicleState, RaceProgress, f64); 2], forced: crate::automata::ForcedEvents) -> Result<()> {
        let j = 1 - i;
        let rl = &self.track.raceline;
        let (ego, ego_p, ego_n) = snap[i];
        let (opp, opp_p, opp_n) = snap[j];
        let gap = rl.signed_gap(ego_p.arc_s, opp_p.arc_s);
        let leader = self.leader == i;
        let role = if leader { Role::Defender } else { Role::Attacker };
        let car = &mut self.cars[i];
        let Some(net) = car.network.as_mut() else { return Ok(()) };
        let obs = Observation { t, gap, opp_lateral: opp_n, opp_speed: opp.v, ego_lateral: ego_n, ego_speed: ego.v };
        let word = apply_observation_radius(car.estimator.observe(obs), gap, role, &self.cfg.rules);
        let frame = InputFrame {
            ip0: self.flags[i],
            ip1: if car.output.op0 == OhvWord::NONE { TrajectoryTag::Raceline } else { TrajectoryTag::Override },
            ip2: gap,
            ip3: leader,
            ip4: car.aems.budget,
            ip5: word,
            forced,
        };
        let mut planner = RacePlanner {
            track: &self.track,
            params: &car.cfg.vehicle,
            config: &car.cfg.planner,
            triggers: &car.cfg.triggers,
            now: Situation {
                ego,
                opp,
                ego_s: ego_p.arc_s,
                ego_n,
                opp_s: opp_p.arc_s,
                opp_n,
                budget: car.aems.budget,
                base_cap: self.flags[i].velocity_limit.min(car.cfg.vehicle.v_max),
            },
        };
        let out = net.tick(&frame, &mut planner).map_err(|e| with_context(e, t, i))?;
        let armed = net.armed();
        let autopass = net.states.autopass;
        let mut events = Vec::new();
        for tr in &out.transitions {
            events.push(LogEvent::transition(t, i, tr));
            if tr.automaton == "argos" && tr.to == ArgosState::Wait.to_string() {
                events.push(LogEvent::opportunity(t, i, armed.unwrap_or(role)));
            }
        }
        if out.fsc.is_none() {
            car.invalid_fsc_ticks += 1;
        }
        if car.last_fsc != Some(out.fsc) {
            events.push(LogEvent::fsc(t, i, &net.states, out.truncated));
            car.last_fsc = Some(out.fsc);
        }
        if out.output != car.output {
            if out.output.op0 != car.output.op0 {
                events.push(LogEvent::new(t, i, "override", json!({"op0": out.output.op0.0})));
            }
            car.output = out.output;
            car.refresh = true;
        }
        car.boost_requested = autopass == AutoPassState::Pass;
        for ev in events {
            self.emit(ev);
        }
        Ok(())
    }

    /// Builds the local reference for car `i` from its selected outputs.
    fn reference(&mut self, i: usize, gap_ahead: Option<(f64, f64)>, cap: f64) -> Result<RefPath> {
        let rl = &self.track.raceline;
        let car = &mut self.cars[i];
        let scale = car.cfg.speed_scale;
        let s0 = car.progress.arc_s;
        let mut wps: Vec<Waypoint> = match &car.output.op2 {
            Reference::Global => {
                car.plan_hint = None;
                (0..=WINDOW_BACK + WINDOW_AHEAD)
                    .map(|k| {
                        let s = s0 + k as f64 - WINDOW_BACK as f64;
                        let p = rl.point_at(s);
                        Waypoint { x: p.x, y: p.y, v: rl.speed_at(s) * scale }
                    })
                    .collect()
            }
            Reference::Plan(plan) => {
                let hint = match &car.plan_hint {
                    Some((p, h)) if Arc::ptr_eq(p, plan) => Some(*h),
                    _ => None,
                };
                let idx = nearest_index(&plan.waypoints, car.state.pos(), hint);
                car.plan_hint = Some((plan.clone(), idx));
                let lo = idx.saturating_sub(WINDOW_BACK);
                let hi = (idx + WINDOW_AHEAD + 1).min(plan.waypoints.len());
                plan.waypoints[lo..hi].to_vec()
            }
        };
        match (&car.output.op1, &car.output.op2) {
            (Reference::Global, Reference::Plan(_)) => {
                for (k, w) in wps.iter_mut().enumerate() {
                    w.v = rl.speed_at(s0 + k as f64) * scale;
                }
            }
            (Reference::Plan(v), op2) if !matches!(op2, Reference::Plan(p) if Arc::ptr_eq(p, v)) => {
                let vi = nearest_index(&v.waypoints, car.state.pos(), None);
                let speed = v.waypoints[vi].v;
                for w in wps.iter_mut() {
                    w.v = speed;
                }
            }
            _ => {}
        }
        if let (Some((gap, opp_v)), true) = (gap_ahead, car.output.op0 == OhvWord::NONE) {
            let governed = (opp_v + self.cfg.follow_gain * (gap - self.cfg.follow_gap)).max(0.0);
            for w in wps.iter_mut() {
                w.v = w.v.min(governed);
            }
        }
        for w in wps.iter_mut() {
            w.v = w.v.min(cap);
        }
        RefPath::open(&wps)
    }

    fn drive(&mut self, i: usize, t: f64, control_tick: bool, snap: &[(VehicleState, RaceProgress, f64); 2]) -> Result<()> {
        let dt = self.cfg.sim_dt;
        let lap_len = self.track.raceline.total_length();
        let in_zone = self.track.in_zone(self.cars[i].progress.arc_s);
        let requested = self.cars[i].boost_requested;
        let allowed = boost_allowed(requested, in_zone);
        let denied = requested && !allowed;
        if denied && !self.cars[i].boost_denied {
            let v = Violation { t, car: i, rule: Rule::R4, detail: "boost requested outside a passing zone".into(), value: 0.0 };
            self.emit(LogEvent::violation(&v));
            self.violations.push(v);
        }
        self.cars[i].boost_denied = denied;
        self.cars[i].aems.drain_active = allowed;
        let flag = self.flags[i];
        let params = self.cars[i].cfg.vehicle.clone();
        let cap = speed_limit(&params, &self.cars[i].aems, flag.velocity_limit);
        if control_tick || self.cars[i].refresh {
            let j = 1 - i;
            let gap = self.track.raceline.signed_gap(snap[i].1.arc_s, snap[j].1.arc_s);
            let follow = (self.cars[i].cfg.policy == Policy::Argos && self.leader != i && gap > 0.0 && gap < self.cars[i].cfg.triggers.trig0)
                .then_some((gap, snap[j].0.v));
            let path = self.reference(i, follow, cap)?;
            let car = &mut self.cars[i];
            let (cmd, _) = car.tracker.control(&path, &car.state, &params)?;
            car.command = cmd;
            car.refresh = false;
        }
        let car = &mut self.cars[i];
        if car.aems.boosting() {
            car.boost_used += dt;
            if !in_zone {
                car.boost_outside_zone += dt;
            }
        }
        car.state = step(car.state, car.command, dt, &params, cap)?;
        car.aems = aems_drain(car.aems, dt);
        car.min_budget = car.min_budget.min(car.aems.budget);
        car.progress.distance += car.state.v * dt;
        let old_s = car.progress.arc_s;
        let (s, n) = self.track.raceline.frenet(car.state.pos(), Some(old_s));
        car.progress.arc_s = s;
        car.n = n;
        if s < old_s - lap_len / 2.0 {
            car.progress.laps += 1;
            car.aems = aems_lap_reset(car.aems);
            let lap_time = t + dt - car.lap_start;
            car.lap_start = t + dt;
            car.lap_times.push(lap_time);
            let ev = LogEvent::new(t + dt, i, "lap", json!({"lap": car.progress.laps, "lap_time": lap_time, "distance": car.progress.distance}));
            self.emit(ev);
        }
        Ok(())
    }

    fn run(mut self) -> Result<RaceOutcome> {
        let dt = self.cfg.sim_dt;
        let every = (self.cars[0].cfg.tracker.dt / dt).round() as u64;
        let every1 = (self.cars[1].cfg.tracker.dt / dt).round() as u64;
        let lap_len = self.track.raceline.total_length();
        let max_ticks = ((self.cfg.laps as f64 + 1.0) * lap_len / 10.0 / dt) as u64;
        let mut forced = [crate::automata::ForcedEvents::default(); 2];
        let mut tick: u64 = 0;
        loop {
            let t = tick as f64 * dt;
            let snap = [0, 1].map(|i| (self.cars[i].state, self.cars[i].progress, self.cars[i].n));
            let progress = [snap[0].1, snap[1].1];
            let flags = update_flag(&progress, &self.track, self.cfg.laps, self.cfg.flag_velocity_limit);
            for i in 0..2 {
                if tick == 0 || flags[i].color != self.flags[i].color {
                    self.emit(LogEvent::new(t, i, "flag", json!({"color": flags[i].color, "velocity_limit": flags[i].velocity_limit})));
                }
            }
            self.flags = flags;
            self.leader = leader_flag(&progress, self.leader);
            for i in 0..2 {
                self.decide(i, t, &snap, forced[i])?;
            }
            for (i, e) in [every, every1].into_iter().enumerate() {
                self.drive(i, t, tick % e == 0, &snap)?;
            }
            let views = [0, 1].map(|i| {
                let c = &self.cars[i];
                let states = c.network.as_ref().map(|n| n.states);
                CarView {
                    state: c.state,
                    distance: c.progress.distance,
                    in_zone: self.track.in_zone(c.progress.arc_s),
                    autopass: states.map_or(AutoPassState::Disarm, |s| s.autopass),
                    kaval: states.map_or(KavalState::Disarm, |s| s.kaval),
                    is_leader: self.leader == i,
                }
            });
            let outcome = self.control.enforce(t + dt, &views, &self.cars[0].cfg.vehicle);
            for v in outcome.violations {
                self.emit(LogEvent::violation(&v));
                self.violations.push(v);
            }
            forced = outcome.forced;
            if tick % every == 0 {
                for (i, c) in self.cars.iter().enumerate() {
                    let s = &c.state;
                    let _ = writeln!(
                        self.odometry,
                        "{:.2},{i},{:.4},{:.4},{:.5},{:.4},{:.3},{:.4},{},{:.3}",
                        t + dt,
                        s.x,
                        s.y,
                        s.phi,
                        s.v,
                        c.progress.arc_s,
                        c.n,
                        c.progress.laps,
                        c.aems.budget
                    );
                }
            }
            tick += 1;
            if flags.iter().all(|f| f.color == FlagColor::Black) {
                break;
            }
            if tick > max_ticks {
                return Err(Error::Invariant(format!("race did not finish within {max_ticks} ticks")));
            }
        }
        self.finish(tick)
    }

    fn finish(self, ticks: u64) -> Result<RaceOutcome> {
        let mut log = self.log.join("\n");
        log.push('\n');
        let parsed = parse_log(&log)?;
        let verdict = verify_session(&parsed.trace, parsed.opportunities, parsed.full_framework());
        let cars = self
            .cars
            .iter()
            .enumerate()
            .map(|(i, c)| CarSummary {
                name: c.cfg.name.clone(),
                policy: c.cfg.policy,
                laps: c.progress.laps,
                lap_times: c.lap_times.clone(),
                distance: c.progress.distance,
                boost_used: c.boost_used,
                boost_outside_zone: c.boost_outside_zone,
                min_budget: c.min_budget,
                invalid_fsc_ticks: c.invalid_fsc_ticks,
                counters: verdict.counters[i],
            })
            .collect();
        let summary = RaceSummary {
            name: self.cfg.name.clone(),
            seed: self.cfg.seed,
            ticks,
            duration: ticks as f64 * self.cfg.sim_dt,
            cars,
            verdict,
            violations: self.violations,
            min_clearance: self.control.min_clearance,
        };
        Ok(RaceOutcome { log, odometry: self.odometry, summary })
    }
}

/// Runs one race in memory.
pub fn simulate(config: &ScenarioConfig) -> Result<RaceOutcome> {
    Race::new(config)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Policy;

    fn one_lap() -> ScenarioConfig {
        let mut cfg = ScenarioConfig { laps: 1, ..ScenarioConfig::default() };
        cfg.cars[1].policy = Policy::Mule;
        cfg
    }

    #[test]
    fn short_race_ends_on_the_first_finisher() {
        let out = simulate(&one_lap()).unwrap();
        let s = &out.summary;
        // The checkered flag falls for both once either car completes the
        // distance.
        assert_eq!(s.cars.iter().map(|c| c.laps).max(), Some(1));
        assert!(s.cars.iter().all(|c| c.lap_times.len() == c.laps as usize));
        assert!((s.duration - s.ticks as f64 * 0.02).abs() < 1e-9);
        assert!(s.cars.iter().all(|c| c.invalid_fsc_ticks == 0 && c.min_budget >= 0.0));
        // The mule never boosts and never reports automaton state.
        assert_eq!(s.cars[1].boost_used, 0.0);
        assert!(out.log.lines().all(|l| !(l.contains("\"kind\":\"fsc\"") && l.contains("\"car\":1"))));
        let last_fsc = out.log.lines().filter(|l| l.contains("\"kind\":\"fsc\"")).last().unwrap();
        assert!(last_fsc.contains("\"fsc\":\"fsc00\""), "{last_fsc}");
    }

    #[test]
    fn bad_config_is_rejected_before_running() {
        let cfg = ScenarioConfig { sim_dt: 0.03, ..one_lap() };
        assert!(matches!(simulate(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn nearest_index_respects_hint_window() {
        let wps: Vec<Waypoint> = (0..200).map(|i| Waypoint { x: i as f64, y: 0.0, v: 1.0 }).collect();
        let q = crate::Point::new(150.2, 1.0);
        assert_eq!(nearest_index(&wps, q, None), 150);
        assert_eq!(nearest_index(&wps, q, Some(140)), 150);
        // Outside the search window the best in-window sample wins.
        assert_eq!(nearest_index(&wps, q, Some(10)), 69);
    }

    #[test]
    fn invariant_errors_carry_time_and_car() {
        let e = with_context(Error::Invariant("x".into()), 1.5, 1);
        assert_eq!(e.to_string(), "framework invariant violated: t=1.50 car 1: x");
        assert!(matches!(with_context(Error::Config("c".into()), 0.0, 0), Error::Config(_)));
    }
}
