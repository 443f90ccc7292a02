//! Kinematic bicycle integration with actuator limits, and the boost-energy
//! reservoir that gates above-limit speed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::track::geometry::{wrap_angle, Point};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    /// Global heading in `(-π, π]`.
    pub phi: f64,
    pub v: f64,
}

impl VehicleState {
    pub fn pos(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Longitudinal acceleration and front steering angle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Command {
    pub a: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams {
    /// Wheelbase, m.
    pub wheelbase: f64,
    /// Overall car length, m.
    pub car_length: f64,
    pub car_width: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    /// Unboosted top speed, m/s.
    pub v_max: f64,
    /// Extra speed allowed while boosting, m/s.
    pub u_boost: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            wheelbase: 3.0,
            car_length: 4.9,
            car_width: 1.9,
            a_min: -10.0,
            a_max: 6.0,
            delta_min: -0.3,
            delta_max: 0.3,
            v_max: 50.0,
            u_boost: 10.0,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.wheelbase > 0.0 && self.car_length > 0.0 && self.car_width > 0.0) {
            return Err(Error::Config("vehicle dimensions must be positive".into()));
        }
        if !(self.a_min < 0.0 && 0.0 < self.a_max) {
            return Err(Error::Config("vehicle needs a_min < 0 < a_max".into()));
        }
        if !(self.delta_min < 0.0 && 0.0 < self.delta_max) {
            return Err(Error::Config("vehicle needs delta_min < 0 < delta_max".into()));
        }
        if !(self.v_max > 0.0 && self.u_boost >= 0.0) {
            return Err(Error::Config("vehicle needs v_max > 0 and u_boost >= 0".into()));
        }
        Ok(())
    }
}

pub fn clamp_command(cmd: Command, params: &VehicleParams) -> Command {
    Command {
        a: cmd.a.clamp(params.a_min, params.a_max),
        delta: cmd.delta.clamp(params.delta_min, params.delta_max),
    }
}

/// One forward-Euler step of the kinematic bicycle.
///
/// Speed is clamped to `[0, speed_cap]`; pass `f64::INFINITY` for no cap.
pub fn step(state: VehicleState, cmd: Command, dt: f64, params: &VehicleParams, speed_cap: f64) -> Result<VehicleState> {
    if !(dt > 0.0) {
        return Err(Error::Step(format!("dt must be positive, got {dt}")));
    }
    let (sin, cos) = state.phi.sin_cos();
    let v = state.v;
    Ok(VehicleState {
        x: state.x + v * cos * dt,
        y: state.y + v * sin * dt,
        phi: wrap_angle(state.phi + v * cmd.delta.tan() / params.wheelbase * dt),
        v: (v + cmd.a * dt).clamp(0.0, speed_cap.max(0.0)),
    })
}

/// Boost-energy budget measured in seconds of boosted driving.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AemsReservoir {
    pub budget: f64,
    pub per_lap_grant: f64,
    pub drain_active: bool,
}

pub const DEFAULT_LAP_GRANT: f64 = 20.0;

impl AemsReservoir {
    pub fn new(per_lap_grant: f64) -> Self {
        Self { budget: per_lap_grant, per_lap_grant, drain_active: false }
    }

    pub fn boosting(&self) -> bool {
        self.drain_active && self.budget > 0.0
    }
}

impl Default for AemsReservoir {
    fn default() -> Self {
        Self::new(DEFAULT_LAP_GRANT)
    }
}

pub fn aems_drain(res: AemsReservoir, dt: f64) -> AemsReservoir {
    if !res.drain_active || res.budget <= 0.0 {
        return AemsReservoir { drain_active: res.drain_active && res.budget > 0.0, ..res };
    }
    let budget = (res.budget - dt).max(0.0);
    AemsReservoir { budget, drain_active: budget > 0.0, ..res }
}

pub fn aems_lap_reset(res: AemsReservoir) -> AemsReservoir {
    AemsReservoir { budget: res.per_lap_grant, ..res }
}

/// Current speed cap: the flag limit, or the top speed plus boost while
/// boosting.
pub fn speed_limit(params: &VehicleParams, res: &AemsReservoir, flag_limit: f64) -> f64 {
    let boost = if res.boosting() { params.u_boost } else { 0.0 };
    flag_limit.min(params.v_max + boost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> VehicleParams {
        VehicleParams::default()
    }

    #[test]
    fn straight_step() {
        let s = VehicleState { x: 0.0, y: 0.0, phi: 0.0, v: 10.0 };
        let n = step(s, Command::default(), 0.1, &params(), f64::INFINITY).unwrap();
        assert!((n.x - 1.0).abs() < 1e-12);
        assert_eq!(n.y, 0.0);
        assert_eq!(n.phi, 0.0);
    }

    #[test]
    fn no_reverse() {
        let p = params();
        let s = VehicleState { v: 0.0, ..Default::default() };
        let n = step(s, Command { a: p.a_min, delta: 0.0 }, 0.1, &p, f64::INFINITY).unwrap();
        assert_eq!(n.v, 0.0);
    }

    #[test]
    fn rejects_bad_dt() {
        let s = VehicleState::default();
        assert!(matches!(step(s, Command::default(), 0.0, &params(), 1.0), Err(Error::Step(_))));
    }

    #[test]
    fn curvature_converges() {
        // Heading rate per unit distance is tan(δ)/L; compare coarse and fine
        // integration after 20 m.
        let p = params();
        let delta = 0.1;
        let run = |dt: f64| {
            let mut s = VehicleState { v: 10.0, ..Default::default() };
            let steps = (2.0 / dt).round() as usize;
            for _ in 0..steps {
                s = step(s, Command { a: 0.0, delta }, dt, &p, f64::INFINITY).unwrap();
            }
            s
        };
        let coarse = run(0.001);
        let fine = run(0.00001);
        let kappa = delta.tan() / p.wheelbase;
        assert!((coarse.phi - kappa * 20.0).abs() < 1e-9);
        let chord_err = coarse.pos().dist(fine.pos()) / 20.0;
        assert!(chord_err < 1e-3);
    }

    #[test]
    fn clamp_examples() {
        let p = params();
        let c = Command { a: 1.0, delta: 0.05 };
        assert_eq!(clamp_command(c, &p), c);
        let c2 = clamp_command(Command { a: 2.0 * p.a_max, delta: -1.0 }, &p);
        assert_eq!(c2, Command { a: p.a_max, delta: p.delta_min });
        assert_eq!(clamp_command(c2, &p), c2);
    }

    #[test]
    fn drain_examples() {
        let r = AemsReservoir { budget: 6.0, per_lap_grant: 20.0, drain_active: true };
        assert!((aems_drain(r, 0.5).budget - 5.5).abs() < 1e-12);
        let r = AemsReservoir { budget: 0.3, ..r };
        let d = aems_drain(r, 0.5);
        assert_eq!(d.budget, 0.0);
        assert!(!d.drain_active);
        let idle = AemsReservoir { drain_active: false, ..r };
        assert_eq!(aems_drain(idle, 0.5), idle);
    }

    #[test]
    fn lap_reset_examples() {
        let r = AemsReservoir { budget: 1.2, ..AemsReservoir::default() };
        assert_eq!(aems_lap_reset(r).budget, 20.0);
        assert_eq!(aems_lap_reset(AemsReservoir::default()).budget, 20.0);
        let custom = AemsReservoir { budget: 3.0, ..AemsReservoir::new(15.0) };
        assert_eq!(aems_lap_reset(custom).budget, 15.0);
    }

    #[test]
    fn speed_limit_examples() {
        let p = params();
        let boosting = AemsReservoir { drain_active: true, ..AemsReservoir::default() };
        assert_eq!(speed_limit(&p, &boosting, 100.0), p.v_max + p.u_boost);
        assert_eq!(speed_limit(&p, &boosting, 55.0), 55.0);
        let empty = AemsReservoir { budget: 0.0, drain_active: true, per_lap_grant: 20.0 };
        assert_eq!(speed_limit(&p, &empty, 100.0), p.v_max);
        assert_eq!(speed_limit(&p, &AemsReservoir::default(), 30.0), 30.0);
    }

    proptest! {
        #[test]
        fn budget_never_negative(steps in proptest::collection::vec((0.0..2.0f64, any::<bool>()), 1..200)) {
            let mut r = AemsReservoir::new(5.0);
            for (dt, on) in steps {
                r.drain_active = on;
                r = aems_drain(r, dt);
                prop_assert!(r.budget >= 0.0);
                prop_assert!(r.budget <= r.per_lap_grant);
            }
        }

        #[test]
        fn straight_distance_matches_integral(accels in proptest::collection::vec(-5.0..5.0f64, 1..300)) {
            let p = params();
            let dt = 0.02;
            let mut s = VehicleState { v: 20.0, phi: 0.7, ..Default::default() };
            let mut dist = 0.0;
            for a in accels {
                dist += s.v * dt;
                s = step(s, Command { a, delta: 0.0 }, dt, &p, f64::INFINITY).unwrap();
                prop_assert_eq!(s.phi, 0.7);
            }
            let traveled = s.pos().norm();
            prop_assert!((traveled - dist).abs() <= 1e-6 * dist.max(1.0));
        }

        #[test]
        fn turn_rate_bounded(v in 0.0..80.0f64, d in -1.0..1.0f64) {
            let p = params();
            let dt = 0.02;
            let c = clamp_command(Command { a: 0.0, delta: d }, &p);
            let s = VehicleState { v, ..Default::default() };
            let n = step(s, c, dt, &p, f64::INFINITY).unwrap();
            prop_assert!(n.phi.abs() <= v * p.delta_max.tan() / p.wheelbase * dt + 1e-12);
            let again = step(s, c, dt, &p, f64::INFINITY).unwrap();
            prop_assert_eq!(n, again);
        }
    }
}
