//! Quintic polynomial segments in the plane.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::track::geometry::Point;

/// Position, velocity and acceleration of a point mass in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundaryState {
    pub pos: Point,
    pub vel: Point,
    pub acc: Point,
}

impl BoundaryState {
    pub fn is_finite(&self) -> bool {
        self.pos.is_finite() && self.vel.is_finite() && self.acc.is_finite()
    }
}

/// One quintic per axis over `[0, duration]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuinticSegment {
    /// Coefficients `a0..a5` for x.
    pub x: [f64; 6],
    /// Coefficients `a0..a5` for y.
    pub y: [f64; 6],
    pub duration: f64,
}

/// Coefficients for one axis. The leading three follow from the start state;
/// the trailing three solve the 3×3 end-state system by Cramer's rule.
fn fit_axis(xs: f64, vs: f64, acs: f64, xe: f64, ve: f64, ace: f64, t: f64) -> [f64; 6] {
    let (t2, t3) = (t * t, t * t * t);
    let (t4, t5) = (t3 * t, t3 * t2);
    let m = [[t3, t4, t5], [3.0 * t2, 4.0 * t3, 5.0 * t4], [6.0 * t, 12.0 * t2, 20.0 * t3]];
    let rhs = [xe - xs - vs * t - acs * t2 / 2.0, ve - vs - acs * t, ace - acs];
    let det3 = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let det = det3(&m);
    // det = 2·T⁹, never zero for T > 0.
    debug_assert!(det != 0.0);
    let mut sol = [0.0; 3];
    for (col, out) in sol.iter_mut().enumerate() {
        let mut mc = m;
        for row in 0..3 {
            mc[row][col] = rhs[row];
        }
        *out = det3(&mc) / det;
    }
    [xs, vs, acs / 2.0, sol[0], sol[1], sol[2]]
}

pub fn fit_quintic(start: &BoundaryState, end: &BoundaryState, duration: f64) -> Result<QuinticSegment> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::Parameter(format!("segment duration must be positive, got {duration}")));
    }
    if !(start.is_finite() && end.is_finite()) {
        return Err(Error::Parameter("boundary states must be finite".into()));
    }
    Ok(QuinticSegment {
        x: fit_axis(start.pos.x, start.vel.x, start.acc.x, end.pos.x, end.vel.x, end.acc.x, duration),
        y: fit_axis(start.pos.y, start.vel.y, start.acc.y, end.pos.y, end.vel.y, end.acc.y, duration),
        duration,
    })
}

fn eval_axis(c: &[f64; 6], t: f64) -> (f64, f64, f64) {
    let p = c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))));
    let v = c[1] + t * (2.0 * c[2] + t * (3.0 * c[3] + t * (4.0 * c[4] + t * 5.0 * c[5])));
    let a = 2.0 * c[2] + t * (6.0 * c[3] + t * (12.0 * c[4] + t * 20.0 * c[5]));
    (p, v, a)
}

impl QuinticSegment {
    /// Evaluates without range checks.
    pub fn at(&self, t: f64) -> BoundaryState {
        let (px, vx, ax) = eval_axis(&self.x, t);
        let (py, vy, ay) = eval_axis(&self.y, t);
        BoundaryState { pos: Point::new(px, py), vel: Point::new(vx, vy), acc: Point::new(ax, ay) }
    }
}

pub fn eval_quintic(seg: &QuinticSegment, t: f64) -> Result<BoundaryState> {
    if !(0.0..=seg.duration).contains(&t) {
        return Err(Error::Parameter(format!("t = {t} outside [0, {}]", seg.duration)));
    }
    Ok(seg.at(t))
}
