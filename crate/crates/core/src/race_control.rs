//! Flags, leader bookkeeping, opponent-intent estimation and the R1–R5
//! rule book.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

pub use crate::automata::{FlagColor, RaceFlag};
use crate::automata::{AutoPassState, ForcedEvents, KavalState, OhvWord, Role};
use crate::error::{Error, Result};
use crate::track::geometry::Point;
use crate::track::Track;
use crate::vehicle::{VehicleParams, VehicleState};

/// Race progress of one car.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RaceProgress {
    pub laps: u32,
    pub arc_s: f64,
    /// Odometer, m.
    pub distance: f64,
}

impl RaceProgress {
    fn key(&self) -> (u32, f64) {
        (self.laps, self.arc_s)
    }
}

/// Blue inside a passing zone, Green elsewhere, Black for both once either
/// car has completed `laps_total`.
pub fn update_flag(progress: &[RaceProgress; 2], track: &Track, laps_total: u32, velocity_limit: f64) -> [RaceFlag; 2] {
    if progress.iter().any(|p| p.laps >= laps_total) {
        return [RaceFlag { color: FlagColor::Black, velocity_limit: 0.0 }; 2];
    }
    progress.map(|p| RaceFlag {
        color: if track.in_zone(p.arc_s) { FlagColor::Blue } else { FlagColor::Green },
        velocity_limit,
    })
}

/// Index of the leading car. Strictly greater `(laps, arc_s)` leads; on an
/// exact tie `previous` keeps the lead.
pub fn leader_flag(progress: &[RaceProgress; 2], previous: usize) -> usize {
    match progress[0].key().partial_cmp(&progress[1].key()) {
        Some(std::cmp::Ordering::Greater) => 0,
        Some(std::cmp::Ordering::Less) => 1,
        _ => previous,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Lateral raceline offset that counts as off-line, m.
    pub offset_threshold: f64,
    /// Speed difference that counts as closing or opening, m/s.
    pub closing_threshold: f64,
    /// History length used to judge lateral trends, s.
    pub window: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self { offset_threshold: 1.5, closing_threshold: 0.5, window: 1.0 }
    }
}

/// What one car sees of the other in a tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub t: f64,
    /// Signed separation, positive when the opponent is ahead.
    pub gap: f64,
    /// Opponent's lateral raceline offset, left positive.
    pub opp_lateral: f64,
    pub opp_speed: f64,
    pub ego_lateral: f64,
    pub ego_speed: f64,
}

/// Stateful intent classifier for one observing car.
#[derive(Debug, Clone)]
pub struct OpponentEstimator {
    pub config: EstimatorConfig,
    history: VecDeque<Observation>,
    was_attempting: bool,
    was_blocking: bool,
}

impl OpponentEstimator {
    pub fn new(config: EstimatorConfig) -> Self {
        Self { config, history: VecDeque::new(), was_attempting: false, was_blocking: false }
    }

    /// Forgets history, e.g. when the opponent leaves the observation radius.
    pub fn reset(&mut self) {
        self.history.clear();
        self.was_attempting = false;
        self.was_blocking = false;
    }

    /// Adds an observation and returns the intent word.
    pub fn observe(&mut self, obs: Observation) -> OhvWord {
        self.history.push_back(obs);
        while self.history.len() > 2 && obs.t - self.history[1].t >= self.config.window {
            self.history.pop_front();
        }
        let word = estimate_opponent(self.history.make_contiguous(), &self.config, self.was_attempting, self.was_blocking);
        let c = &self.config;
        let off_line = obs.opp_lateral.abs() > c.offset_threshold;
        match word {
            OhvWord::ATTEMPTING => self.was_attempting = true,
            OhvWord::BLOCKING => self.was_blocking = true,
            _ => {}
        }
        if !off_line {
            self.was_attempting = false;
            self.was_blocking = false;
        }
        if obs.gap > 0.0 {
            self.was_attempting = false;
        } else {
            self.was_blocking = false;
        }
        word
    }
}

/// Classifies the newest sample of `history` (oldest first).
///
/// Behind the observer: off-line and closing is an attempt; a previous
/// attempt now re-converging while opening is an abandon. Ahead: off-line
/// toward the observer's own side is a block; a previous block now
/// re-converging while slower than the observer is a fallback.
pub fn estimate_opponent(history: &[Observation], config: &EstimatorConfig, was_attempting: bool, was_blocking: bool) -> OhvWord {
    if history.len() < 2 {
        return OhvWord::NONE;
    }
    let now = history[history.len() - 1];
    let past = history[0];
    let thr = config.offset_threshold;
    let rel = now.opp_speed - now.ego_speed;
    let reconverging = now.opp_lateral.abs() < past.opp_lateral.abs() - 0.05;
    let off_line = now.opp_lateral.abs() > thr;
    if now.gap < 0.0 {
        if was_attempting && reconverging && rel < -config.closing_threshold {
            return OhvWord::ABANDONED;
        }
        if off_line && rel > config.closing_threshold {
            return OhvWord::ATTEMPTING;
        }
    } else if now.gap > 0.0 {
        if was_blocking && reconverging && rel < -config.closing_threshold {
            return OhvWord::FALLBACK;
        }
        let same_side = now.ego_lateral.abs() > thr && now.ego_lateral.signum() == now.opp_lateral.signum();
        if off_line && same_side {
            return OhvWord::BLOCKING;
        }
    }
    OhvWord::NONE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuleBook {
    /// R1, m.
    pub observation_radius_attacker: f64,
    pub observation_radius_defender: f64,
    /// R2, block initiations allowed per passing-zone visit.
    pub max_block_attempts: u32,
    /// R3, footprint clearance, m.
    pub safety_distance: f64,
    /// R4, boost seconds granted per lap.
    pub boost_grant: f64,
    /// R5, distance allowed per maneuver, m.
    pub fatigue_distance_attacker: f64,
    pub fatigue_distance_defender: f64,
}

impl Default for RuleBook {
    fn default() -> Self {
        Self {
            observation_radius_attacker: 150.0,
            observation_radius_defender: 100.0,
            max_block_attempts: 2,
            safety_distance: 7.5,
            boost_grant: crate::vehicle::DEFAULT_LAP_GRANT,
            fatigue_distance_attacker: 1200.0,
            fatigue_distance_defender: 400.0,
        }
    }
}

impl RuleBook {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.observation_radius_attacker,
            self.observation_radius_defender,
            self.safety_distance,
            self.boost_grant,
            self.fatigue_distance_attacker,
            self.fatigue_distance_defender,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) || self.max_block_attempts == 0 {
            return Err(Error::Config("rule book values must be positive".into()));
        }
        if self.observation_radius_attacker <= self.observation_radius_defender {
            return Err(Error::Config("attacker observation radius must exceed the defender's".into()));
        }
        Ok(())
    }

    pub fn observation_radius(&self, role: Role) -> f64 {
        match role {
            Role::Attacker => self.observation_radius_attacker,
            Role::Defender => self.observation_radius_defender,
        }
    }

    pub fn fatigue_distance(&self, role: Role) -> f64 {
        match role {
            Role::Attacker => self.fatigue_distance_attacker,
            Role::Defender => self.fatigue_distance_defender,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    R1,
    R2,
    R3,
    R4,
    R5,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t: f64,
    pub car: usize,
    pub rule: Rule,
    pub detail: String,
    pub value: f64,
}

/// R1: the intent word is blank beyond the role's observation radius.
pub fn apply_observation_radius(word: OhvWord, gap: f64, role: Role, rules: &RuleBook) -> OhvWord {
    if gap.abs() > rules.observation_radius(role) {
        OhvWord::NONE
    } else {
        word
    }
}

/// R4: boost only inside a passing zone.
pub fn boost_allowed(requested: bool, in_zone: bool) -> bool {
    requested && in_zone
}

fn corners(s: &VehicleState, p: &VehicleParams) -> [Point; 4] {
    let (sin, cos) = s.phi.sin_cos();
    let (hl, hw) = (p.car_length / 2.0, p.car_width / 2.0);
    let c = s.pos();
    [(hl, hw), (hl, -hw), (-hl, -hw), (-hl, hw)].map(|(a, b)| Point::new(c.x + a * cos - b * sin, c.y + a * sin + b * cos))
}

fn seg_dist(p: Point, a: Point, b: Point) -> f64 {
    crate::track::geometry::project_on_segment(a, b, p).0.dist(p)
}

fn inside(p: Point, rect: &[Point; 4]) -> bool {
    (0..4).all(|i| (rect[(i + 1) % 4] - rect[i]).cross(p - rect[i]) <= 0.0)
}

/// Distance between two rectangular footprints; zero when they overlap.
pub fn footprint_clearance(a: &VehicleState, b: &VehicleState, params: &VehicleParams) -> f64 {
    let (ra, rb) = (corners(a, params), corners(b, params));
    if ra.iter().any(|p| inside(*p, &rb)) || rb.iter().any(|p| inside(*p, &ra)) {
        return 0.0;
    }
    let mut d = f64::INFINITY;
    for (pts, rect) in [(&ra, &rb), (&rb, &ra)] {
        for p in pts.iter() {
            for i in 0..4 {
                d = d.min(seg_dist(*p, rect[i], rect[(i + 1) % 4]));
            }
        }
    }
    d
}

/// Per-car rule bookkeeping.
#[derive(Debug, Clone, Default)]
struct Ledger {
    in_zone: bool,
    blocks_this_visit: u32,
    /// Odometer and role at the start of the running maneuver.
    maneuver: Option<(f64, Role)>,
    forced_fallback: bool,
    forced_abandon: bool,
    low_clearance: bool,
}

/// What race control needs from one car each tick.
#[derive(Debug, Clone, Copy)]
pub struct CarView {
    pub state: VehicleState,
    pub distance: f64,
    pub in_zone: bool,
    pub autopass: AutoPassState,
    pub kaval: KavalState,
    pub is_leader: bool,
}

/// Rule enforcement across both cars.
#[derive(Debug, Clone)]
pub struct RaceControl {
    pub rules: RuleBook,
    ledgers: [Ledger; 2],
    pub min_clearance: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RuleOutcome {
    pub violations: Vec<Violation>,
    /// Fed into each car's next input frame.
    pub forced: [ForcedEvents; 2],
}

impl RaceControl {
    pub fn new(rules: RuleBook) -> Result<Self> {
        rules.validate()?;
        Ok(Self { rules, ledgers: Default::default(), min_clearance: f64::INFINITY })
    }

    /// Applies R2, R3 and R5 after both cars have stepped.
    pub fn enforce(&mut self, t: f64, cars: &[CarView; 2], params: &VehicleParams) -> RuleOutcome {
        let mut out = RuleOutcome::default();
        for (i, car) in cars.iter().enumerate() {
            let rules = &self.rules;
            let l = &mut self.ledgers[i];
            if car.in_zone && !l.in_zone {
                l.blocks_this_visit = 0;
            }
            l.in_zone = car.in_zone;
            let active_role = match (car.autopass, car.kaval) {
                (AutoPassState::Pass | AutoPassState::Abandon, _) => Some(Role::Attacker),
                (_, KavalState::Block | KavalState::Fallback) => Some(Role::Defender),
                _ => None,
            };
            match (l.maneuver, active_role) {
                (None, Some(role)) => {
                    l.maneuver = Some((car.distance, role));
                    if role == Role::Defender {
                        l.blocks_this_visit += 1;
                        if l.blocks_this_visit > rules.max_block_attempts {
                            l.forced_fallback = true;
                            out.violations.push(Violation {
                                t,
                                car: i,
                                rule: Rule::R2,
                                detail: format!("block attempt {} exceeds {}", l.blocks_this_visit, rules.max_block_attempts),
                                value: l.blocks_this_visit as f64,
                            });
                        }
                    }
                }
                (Some(_), None) => {
                    l.maneuver = None;
                    l.forced_fallback = false;
                    l.forced_abandon = false;
                }
                _ => {}
            }
            if let Some((start, role)) = l.maneuver {
                let travelled = car.distance - start;
                let limit = rules.fatigue_distance(role);
                let already = match role {
                    Role::Attacker => l.forced_abandon,
                    Role::Defender => l.forced_fallback,
                };
                if travelled > limit && !already {
                    match role {
                        Role::Attacker => l.forced_abandon = true,
                        Role::Defender => l.forced_fallback = true,
                    }
                    out.violations.push(Violation { t, car: i, rule: Rule::R5, detail: format!("maneuver ran {travelled:.1} m"), value: travelled });
                }
            }
            out.forced[i] = ForcedEvents {
                abandon: l.forced_abandon && car.autopass == AutoPassState::Pass,
                fallback: l.forced_fallback && car.kaval == KavalState::Block,
            };
        }
        let clearance = footprint_clearance(&cars[0].state, &cars[1].state, params);
        self.min_clearance = self.min_clearance.min(clearance);
        let low = clearance < self.rules.safety_distance;
        let attacker = if matches!(cars[0].autopass, AutoPassState::Pass | AutoPassState::Abandon) {
            0
        } else if matches!(cars[1].autopass, AutoPassState::Pass | AutoPassState::Abandon) {
            1
        } else if cars[0].is_leader {
            1
        } else {
            0
        };
        if low && !self.ledgers[attacker].low_clearance {
            out.violations.push(Violation { t, car: attacker, rule: Rule::R3, detail: format!("clearance {clearance:.2} m"), value: clearance });
        }
        for l in &mut self.ledgers {
            l.low_clearance = false;
        }
        self.ledgers[attacker].low_clearance = low;
        out
    }
}
