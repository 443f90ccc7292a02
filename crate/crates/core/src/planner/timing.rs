//! Trapezoidal overtake-time model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OvertakeGeometry {
    /// Lateral distance to clear before running alongside, m.
    pub y_gap: f64,
    /// Diverge angle, rad.
    pub theta1: f64,
    /// Merge angle, rad.
    pub theta2: f64,
    /// Opponent car length, m.
    pub car_length: f64,
    /// Lead over the opponent at the merge point, m.
    pub d_sep_front: f64,
    pub u_ego: f64,
    pub u_opp: f64,
    pub u_boost: f64,
    /// Fraction of the boost speed actually used, in `[0, 1]`.
    pub boost_fraction: f64,
}

impl OvertakeGeometry {
    /// Closing speed `u_ego − u_opp + fraction·u_boost`.
    pub fn closing_speed(&self) -> f64 {
        self.u_ego - self.u_opp + self.boost_fraction * self.u_boost
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OvertakeTimes {
    pub t_a: f64,
    pub t_b: f64,
    pub t_c: f64,
}

impl OvertakeTimes {
    pub fn total(&self) -> f64 {
        self.t_a + self.t_b + self.t_c
    }
}

/// Diverge, alongside and merge times for an overtake at constant closing
/// speed.
pub fn overtake_times(g: &OvertakeGeometry) -> Result<OvertakeTimes> {
    let half_pi = std::f64::consts::FRAC_PI_2;
    for (name, th) in [("theta1", g.theta1), ("theta2", g.theta2)] {
        if !(th > 0.0 && th < half_pi) {
            return Err(Error::Parameter(format!("{name} must lie in (0, π/2), got {th}")));
        }
    }
    if !(g.y_gap >= 0.0 && g.car_length > 0.0) {
        return Err(Error::Parameter("y_gap must be non-negative and car_length positive".into()));
    }
    if g.d_sep_front < g.car_length {
        return Err(Error::Parameter(format!(
            "front separation {} is shorter than the car length {}",
            g.d_sep_front, g.car_length
        )));
    }
    let du = g.closing_speed();
    if !(du > 0.0) {
        return Err(Error::InfeasiblePlan(format!("closing speed {du:.3} m/s cannot complete a pass")));
    }
    Ok(OvertakeTimes {
        t_a: g.y_gap / (du * g.theta1.cos()),
        t_b: g.car_length / du,
        t_c: (g.d_sep_front - g.car_length) / (du * g.theta2.cos()),
    })
}

/// True when the boost budget `ip4` clears the minimum pre-start budget and
/// covers the whole maneuver.
pub fn feasible_overtake(total_time: f64, ip4: f64, trig6: f64) -> bool {
    ip4 > trig6 && total_time <= ip4
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn base() -> OvertakeGeometry {
        OvertakeGeometry {
            y_gap: 3.0,
            theta1: 30f64.to_radians(),
            theta2: 30f64.to_radians(),
            car_length: 5.0,
            d_sep_front: 10.0,
            u_ego: 45.0,
            u_opp: 40.0,
            u_boost: 0.0,
            boost_fraction: 1.0,
        }
    }

    #[test]
    fn known_values() {
        let t = overtake_times(&base()).unwrap();
        // 3 / (5 · cos 30°) = 0.6 / 0.8660254...
        assert!((t.t_a - 0.692_820_323_027_550_9).abs() < 1e-12);
        assert!((t.t_b - 1.0).abs() < 1e-12);
        assert!((t.total() - (t.t_a + t.t_b + t.t_c)).abs() < 1e-15);
        let t0 = overtake_times(&OvertakeGeometry { y_gap: 0.0, ..base() }).unwrap();
        assert_eq!(t0.t_a, 0.0);
    }

    #[test]
    fn boost_closes_the_gap() {
        let g = OvertakeGeometry { u_ego: 40.0, u_boost: 5.0, ..base() };
        assert!((overtake_times(&g).unwrap().t_b - 1.0).abs() < 1e-12);
        let g = OvertakeGeometry { u_ego: 40.0, ..base() };
        assert!(matches!(overtake_times(&g), Err(Error::InfeasiblePlan(_))));
        let g = OvertakeGeometry { d_sep_front: 4.0, ..base() };
        assert!(matches!(overtake_times(&g), Err(Error::Parameter(_))));
    }

    #[test]
    fn feasibility_threshold() {
        assert!(feasible_overtake(5.0, 20.0, 6.0));
        assert!(!feasible_overtake(5.0, 5.9, 6.0));
        assert!(!feasible_overtake(21.0, 20.0, 6.0));
    }

    proptest! {
        #[test]
        fn doubling_closing_speed_halves_times(y in 0.0..20.0f64, th1 in 0.05..1.5f64, th2 in 0.05..1.5f64,
                                               l in 1.0..8.0f64, extra in 0.0..30.0f64, du in 0.5..30.0f64) {
            let g = OvertakeGeometry { y_gap: y, theta1: th1, theta2: th2, car_length: l, d_sep_front: l + extra,
                                       u_ego: 40.0 + du, u_opp: 40.0, u_boost: 0.0, boost_fraction: 1.0 };
            let g2 = OvertakeGeometry { u_ego: 40.0 + 2.0 * du, ..g };
            let (a, b) = (overtake_times(&g).unwrap(), overtake_times(&g2).unwrap());
            prop_assert!((a.t_a - 2.0 * b.t_a).abs() <= 1e-12 * a.t_a.max(1.0));
            prop_assert!((a.t_b - 2.0 * b.t_b).abs() <= 1e-12 * a.t_b.max(1.0));
            prop_assert!((a.t_c - 2.0 * b.t_c).abs() <= 1e-12 * a.t_c.max(1.0));
        }
    }
}
