//! Maneuver planner used by the race loop: predicts both cars forward along
//! the raceline and fits quintic guides through the resulting poses.

use crate::automata::{ManeuverPlanner, TriggerSet};
use crate::planner::{feasible_overtake, ForwardOffset, overtake_times, plan_trajectory, GuidePoint, OvertakeGeometry, PlanSource, PlannerConfig, PlannerOutput};
use crate::track::geometry::{closest_on, wrap_angle};
use crate::track::{Track, Waypoint};
use crate::vehicle::{VehicleParams, VehicleState};

/// Snapshot of the world the planner sees on one tick.
#[derive(Debug, Clone, Copy)]
pub struct Situation {
    pub ego: VehicleState,
    pub opp: VehicleState,
    /// Raceline arc and lateral offset of each car.
    pub ego_s: f64,
    pub ego_n: f64,
    pub opp_s: f64,
    pub opp_n: f64,
    /// Remaining boost budget, s.
    pub budget: f64,
    /// Speed cap without boost, m/s.
    pub base_cap: f64,
}

pub struct RacePlanner<'a> {
    pub track: &'a Track,
    pub params: &'a VehicleParams,
    pub config: &'a PlannerConfig,
    pub triggers: &'a TriggerSet,
    pub now: Situation,
}

/// Share of the acceleration limit assumed when predicting the ego.
const ACCEL_SHARE: f64 = 0.6;

impl RacePlanner<'_> {
    fn lateral_offset(&self) -> f64 {
        self.config.offset(self.triggers.trig8, self.track.config.track_width)
    }

    /// +1 to pass on the left of the opponent, -1 on the right.
    fn roomier_side(&self, s: f64, n: f64) -> f64 {
        let p = self.track.raceline.from_frenet(s, n);
        let left = closest_on(&self.track.bounds.left, true, p).distance;
        let right = closest_on(&self.track.bounds.right, true, p).distance;
        if left > right {
            1.0
        } else {
            -1.0
        }
    }

    fn guide(&self, s: f64, n: f64, speed: f64) -> GuidePoint {
        let rl = &self.track.raceline;
        GuidePoint::with_heading(rl.from_frenet(s, n), rl.heading_at(s), speed)
    }

    fn start_guide(&self) -> GuidePoint {
        let e = &self.now.ego;
        GuidePoint::with_heading(e.pos(), e.phi, e.v.max(1.0))
    }

    /// Raceline continuation after arc `s`, offset `n` fading out over the
    /// first 50 m.
    fn continuation(&self, s: f64, speed: Option<f64>, out: &mut Vec<Waypoint>) {
        let rl = &self.track.raceline;
        let step = self.config.sample_step;
        let n = (self.config.continuation / step).ceil() as usize;
        for k in 1..=n {
            let sk = s + k as f64 * step;
            let p = rl.point_at(sk);
            let v = speed.unwrap_or_else(|| rl.speed_at(sk));
            out.push(Waypoint { x: p.x, y: p.y, v });
        }
    }

    /// Time at which the ego, accelerating from its speed to `v_top`, gains
    /// `distance` on an opponent holding its speed; with its travel.
    fn gain_time(&self, v_top: f64, distance: f64) -> Option<(f64, f64)> {
        let (v0, vo) = (self.now.ego.v, self.now.opp.v);
        let a = ACCEL_SHARE * self.params.a_max;
        let dt = 0.01;
        let (mut t, mut x, mut v) = (0.0, 0.0, v0);
        while t < 60.0 {
            if x - vo * t >= distance {
                return Some((t, x));
            }
            let vn = (v + a * dt).min(v_top);
            x += 0.5 * (v + vn) * dt;
            v = vn;
            t += dt;
        }
        None
    }
}

impl ManeuverPlanner for RacePlanner<'_> {
    fn overtake(&mut self) -> Option<PlannerOutput> {
        let now = self.now;
        let rl = &self.track.raceline;
        let gap = rl.signed_gap(now.ego_s, now.opp_s);
        if gap <= 0.0 {
            return None;
        }
        let d = self.lateral_offset();
        let l_cd = self.params.car_length;
        let d_sep_front = self.triggers.trig4 + l_cd;
        let v_top = (now.base_cap + self.config.boost_fraction * self.params.u_boost).min(self.params.v_max + self.params.u_boost);
        let geometry = OvertakeGeometry {
            y_gap: d,
            theta1: self.config.theta_diverge,
            theta2: self.config.theta_merge,
            car_length: l_cd,
            d_sep_front,
            u_ego: now.ego.v.min(now.base_cap),
            u_opp: now.opp.v,
            u_boost: self.params.u_boost,
            boost_fraction: self.config.boost_fraction,
        };
        let times = overtake_times(&geometry).ok()?;
        if !feasible_overtake(times.total(), now.budget, self.triggers.trig6) {
            return None;
        }
        // `g1` and `g2` sit this far behind and ahead of the opponent.
        let forward = match self.config.g2_forward {
            ForwardOffset::Wheelbase => self.params.wheelbase,
            ForwardOffset::CarLength => l_cd,
        };
        let alongside = l_cd + self.triggers.trig8 + forward;
        let (_, x1) = self.gain_time(v_top, gap - alongside)?;
        let (_, x2) = self.gain_time(v_top, gap + alongside)?;
        let (t3, x3) = self.gain_time(v_top, gap + d_sep_front)?;
        if t3 > now.budget {
            return None;
        }
        let end = now.ego_s + x3;
        if !self.track.in_zone(rl.wrap_s(end)) || !self.track.in_zone(now.ego_s) {
            return None;
        }
        let n_side = now.opp_n + self.roomier_side(now.opp_s, now.opp_n) * d;
        let guides = [
            self.start_guide(),
            self.guide(now.ego_s + x1, n_side, v_top),
            self.guide(now.ego_s + x2, n_side, v_top),
            self.guide(end, 0.0, v_top),
        ];
        let mut plan = plan_trajectory(&guides, self.config.sample_step, &self.track.bounds, PlanSource::Overtake).ok()?;
        self.continuation(end, Some(v_top), &mut plan.waypoints);
        Some(plan)
    }

    fn defense(&mut self) -> Option<PlannerOutput> {
        let now = self.now;
        let rl = &self.track.raceline;
        if rl.signed_gap(now.ego_s, now.opp_s) >= 0.0 {
            return None;
        }
        let horizon = self.config.defense_horizon;
        let d = self.lateral_offset();
        let lateral_rate = now.opp.v * wrap_angle(now.opp.phi - rl.heading_at(now.opp_s)).sin();
        let predicted = now.opp_n + lateral_rate * horizon;
        if predicted.abs() < 1.0 {
            return None;
        }
        let n_block = predicted.signum() * (predicted.abs() + self.config.defense_lateral_bias).min(d);
        // Superprojection: a car-length multiple past where the opponent is
        // expected to be after the horizon.
        let reach = now.opp.v * horizon + self.config.defense_k_mult * self.params.car_length;
        let opp_s = now.ego_s + rl.signed_gap(now.ego_s, now.opp_s);
        let s_block = (opp_s + reach).max(now.ego_s + now.ego.v * 0.6);
        let v = now.ego.v.max(1.0);
        let s_hold = s_block + v * self.config.defense_hold;
        let s_back = s_hold + v * horizon;
        let guides = [self.start_guide(), self.guide(s_block, n_block, v), self.guide(s_hold, n_block, v), self.guide(s_back, 0.0, v)];
        let mut plan = plan_trajectory(&guides, self.config.sample_step, &self.track.bounds, PlanSource::Defense).ok()?;
        self.continuation(s_back, None, &mut plan.waypoints);
        Some(plan)
    }

    fn merge_behind(&mut self, _source: PlanSource) -> PlannerOutput {
        let now = self.now;
        let rl = &self.track.raceline;
        let v = (now.opp.v - self.config.merge_speed_decrement).max(1.0);
        let step = self.config.sample_step;
        // Hold the current offset while dropping back, then ease onto the line.
        let hold = v * 1.0;
        let blend = v * 2.5;
        let n = ((hold + blend + self.config.continuation) / step).ceil() as usize;
        let waypoints = (0..=n)
            .map(|k| {
                let ds = k as f64 * step;
                let u = ((ds - hold) / blend).clamp(0.0, 1.0);
                let smooth = u * u * (3.0 - 2.0 * u);
                let p = rl.from_frenet(now.ego_s + ds, now.ego_n * (1.0 - smooth));
                Waypoint { x: p.x, y: p.y, v }
            })
            .collect();
        PlannerOutput { waypoints, source: PlanSource::Merge }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::track::{build_oval_track, TrackConfig};

    fn pose(track: &Track, s: f64, n: f64, v: f64) -> VehicleState {
        let p = track.raceline.from_frenet(s, n);
        VehicleState { x: p.x, y: p.y, phi: track.raceline.heading_at(s), v }
    }

    fn situation(track: &Track, ego: (f64, f64), opp: (f64, f64)) -> Situation {
        Situation {
            ego: pose(track, ego.0, ego.1, 45.0),
            opp: pose(track, opp.0, opp.1, 45.0),
            ego_s: ego.0,
            ego_n: ego.1,
            opp_s: opp.0,
            opp_n: opp.1,
            budget: 20.0,
            base_cap: 50.0,
        }
    }

    fn with_planner<R>(now: Situation, f: impl FnOnce(&mut RacePlanner) -> R) -> R {
        let track = build_oval_track(&TrackConfig::default()).unwrap();
        let params = VehicleParams::default();
        let config = PlannerConfig::default();
        let triggers = TriggerSet::default();
        let mut p = RacePlanner { track: &track, params: &params, config: &config, triggers: &triggers, now };
        f(&mut p)
    }

    #[test]
    fn overtake_stays_in_bounds_and_swings_wide() {
        let track = build_oval_track(&TrackConfig::default()).unwrap();
        let now = situation(&track, (20.0, 0.0), (47.0, 0.0));
        let plan = with_planner(now, |p| p.overtake()).expect("pass from the start of a straight");
        assert_eq!(plan.source, PlanSource::Overtake);
        let widest = plan
            .waypoints
            .iter()
            .map(|w| track.raceline.frenet(w.pos(), Some(now.ego_s)).1.abs())
            .fold(0.0, f64::max);
        let d = PlannerConfig::default().offset(TriggerSet::default().trig8, track.config.track_width);
        assert!(widest >= 0.95 * d, "widest offset {widest}, wanted about {d}");
        assert!(plan.waypoints.iter().all(|w| track.bounds.contains(w.pos())));
        assert!(plan.waypoints.iter().all(|w| w.v <= 60.0 + 1e-9));
    }

    #[test]
    fn overtake_refused_without_budget_or_target() {
        let track = build_oval_track(&TrackConfig::default()).unwrap();
        let broke = Situation { budget: 2.0, ..situation(&track, (20.0, 0.0), (47.0, 0.0)) };
        assert!(with_planner(broke, |p| p.overtake()).is_none());
        let ahead = situation(&track, (47.0, 0.0), (20.0, 0.0));
        assert!(with_planner(ahead, |p| p.overtake()).is_none());
    }

    #[test]
    fn defense_only_against_a_car_behind_that_moves_over() {
        let track = build_oval_track(&TrackConfig::default()).unwrap();
        let behind = situation(&track, (47.0, 0.0), (20.0, 0.0));
        assert!(with_planner(behind, |p| p.defense()).is_none(), "opponent on the line");
        let mut swinging = behind;
        swinging.opp.phi += 0.1;
        let plan = with_planner(swinging, |p| p.defense()).expect("block a car moving left");
        let n_max = plan.waypoints.iter().map(|w| track.raceline.frenet(w.pos(), Some(47.0)).1).fold(f64::MIN, f64::max);
        assert!(n_max > 1.0);
        let ahead = situation(&track, (20.0, 0.0), (47.0, 0.0));
        assert!(with_planner(ahead, |p| p.defense()).is_none());
    }

    #[test]
    fn merge_returns_to_the_raceline_below_opponent_speed() {
        let track = build_oval_track(&TrackConfig::default()).unwrap();
        let now = situation(&track, (100.0, 8.0), (110.0, 0.0));
        let plan = with_planner(now, |p| p.merge_behind(PlanSource::Merge));
        let last = plan.waypoints.last().unwrap();
        assert!(track.raceline.frenet(last.pos(), Some(300.0)).1.abs() < 1e-6);
        let first = plan.waypoints[0];
        assert!((track.raceline.frenet(first.pos(), Some(100.0)).1 - 8.0).abs() < 1e-6);
        assert!(plan.waypoints.iter().all(|w| (w.v - 40.0).abs() < 1e-9));
    }
}
