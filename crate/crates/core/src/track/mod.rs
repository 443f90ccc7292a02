//! Closed-loop raceline, track bounds and passing zones.
//!
//! The track is a stadium oval: two straights joined by two semicircles,
//! driven counter-clockwise. Arc length `s = 0` sits at the middle of the
//! bottom straight, so the first passing zone wraps through the start line
//! and is stored as two intervals.

pub mod geometry;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use geometry::{closest_on, project_on_segment, Point, Projection};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackConfig {
    pub straight_length: f64,
    pub turn_radius: f64,
    pub track_width: f64,
    pub waypoint_spacing: f64,
    /// Raceline speed on the straights, m/s.
    pub straight_speed: f64,
    /// Raceline speed through the turns, m/s.
    pub corner_speed: f64,
    /// Distance over which the speed setpoint blends between the two, m.
    pub speed_ramp: f64,
    /// Lateral offset of the racing lane from the centerline toward the
    /// infield, m.
    pub lane_offset: f64,
}

impl Default for TrackConfig {
    fn default() -> Self {
        Self {
            straight_length: 1000.0,
            turn_radius: 200.0,
            track_width: 40.0,
            waypoint_spacing: 1.0,
            straight_speed: 50.0,
            corner_speed: 45.0,
            speed_ramp: 150.0,
            lane_offset: 1.5,
        }
    }
}

impl TrackConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("straight_length", self.straight_length),
            ("turn_radius", self.turn_radius),
            ("track_width", self.track_width),
            ("waypoint_spacing", self.waypoint_spacing),
            ("straight_speed", self.straight_speed),
            ("corner_speed", self.corner_speed),
            ("speed_ramp", self.speed_ramp),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("track.{name} must be positive, got {v}")));
            }
        }
        if !(self.lane_offset.is_finite() && self.lane_offset.abs() < self.track_width / 2.0) {
            return Err(Error::Config("track.lane_offset must lie inside the track".into()));
        }
        if self.turn_radius <= self.track_width / 2.0 {
            return Err(Error::Config("track.turn_radius must exceed half the track width".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
    pub v: f64,
}

impl Waypoint {
    pub fn pos(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Closed waypoint loop with cumulative arc length.
#[derive(Debug, Clone)]
pub struct Raceline {
    waypoints: Vec<Waypoint>,
    points: Vec<Point>,
    cum_s: Vec<f64>,
    total_length: f64,
}

impl Raceline {
    pub fn new(waypoints: Vec<Waypoint>) -> Result<Self> {
        if waypoints.len() < 3 {
            return Err(Error::Config("raceline needs at least three waypoints".into()));
        }
        let points: Vec<Point> = waypoints.iter().map(Waypoint::pos).collect();
        let mut cum_s = Vec::with_capacity(points.len());
        let mut s = 0.0;
        for i in 0..points.len() {
            cum_s.push(s);
            let d = points[i].dist(points[(i + 1) % points.len()]);
            if d <= 0.0 {
                return Err(Error::Config(format!("raceline waypoints {i} and {} coincide", (i + 1) % points.len())));
            }
            s += d;
        }
        if waypoints.iter().any(|w| !(w.v >= 0.0)) {
            return Err(Error::Config("raceline speeds must be non-negative".into()));
        }
        Ok(Self { waypoints, points, cum_s, total_length: s })
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn cum_s(&self) -> &[f64] {
        &self.cum_s
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    /// Maps any arc length into `[0, total_length)`.
    pub fn wrap_s(&self, s: f64) -> f64 {
        let w = s.rem_euclid(self.total_length);
        if w >= self.total_length {
            0.0
        } else {
            w
        }
    }

    /// Signed difference `b - a` unwrapped to `(-L/2, L/2]`.
    pub fn signed_gap(&self, a: f64, b: f64) -> f64 {
        let l = self.total_length;
        let mut d = (b - a).rem_euclid(l);
        if d > l / 2.0 {
            d -= l;
        }
        d
    }

    fn segment_at(&self, s: f64) -> (usize, f64) {
        let s = self.wrap_s(s);
        let i = match self.cum_s.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let len = self.segment_length(i);
        (i, ((s - self.cum_s[i]) / len).clamp(0.0, 1.0))
    }

    fn segment_length(&self, i: usize) -> f64 {
        let next = if i + 1 == self.cum_s.len() { self.total_length } else { self.cum_s[i + 1] };
        next - self.cum_s[i]
    }

    fn seg_ends(&self, i: usize) -> (Point, Point) {
        (self.points[i], self.points[(i + 1) % self.points.len()])
    }

    pub fn point_at(&self, s: f64) -> Point {
        let (i, t) = self.segment_at(s);
        let (a, b) = self.seg_ends(i);
        a + (b - a) * t
    }

    pub fn heading_at(&self, s: f64) -> f64 {
        let (i, _) = self.segment_at(s);
        let (a, b) = self.seg_ends(i);
        (b.y - a.y).atan2(b.x - a.x)
    }

    pub fn speed_at(&self, s: f64) -> f64 {
        let (i, t) = self.segment_at(s);
        let j = (i + 1) % self.waypoints.len();
        self.waypoints[i].v * (1.0 - t) + self.waypoints[j].v * t
    }

    /// Exact projection onto the closed raceline.
    pub fn project(&self, q: Point) -> Projection {
        let mut p = closest_on(&self.points, true, q);
        p.arc_s = self.cum_s[p.segment] + (p.point - self.points[p.segment]).norm();
        p
    }

    /// Projection restricted to `±window` meters of arc around `hint_s`.
    /// Falls back to the exact global search when the windowed optimum lands
    /// on the window boundary.
    pub fn project_near(&self, q: Point, hint_s: f64, window: f64) -> Projection {
        let n = self.points.len();
        let span = ((window / (self.total_length / n as f64)).ceil() as usize).max(2);
        if 2 * span + 1 >= n {
            return self.project(q);
        }
        let (center, _) = self.segment_at(hint_s);
        let mut best: Option<(Projection, usize)> = None;
        for k in 0..=2 * span {
            let i = (center + n - span + k) % n;
            let (a, b) = self.seg_ends(i);
            let (p, _) = project_on_segment(a, b, q);
            let d = p.dist(q);
            let better = match &best {
                None => true,
                Some((bp, _)) => d < bp.distance - geometry::TIE_TOLERANCE,
            };
            if better {
                let proj = Projection { point: p, arc_s: self.cum_s[i] + (p - a).norm(), segment: i, distance: d };
                best = Some((proj, k));
            }
        }
        let (proj, k) = best.expect("window is non-empty");
        if k == 0 || k == 2 * span {
            self.project(q)
        } else {
            proj
        }
    }

    /// Arc length and signed lateral offset (positive to the left of travel).
    pub fn frenet(&self, q: Point, hint_s: Option<f64>) -> (f64, f64) {
        let p = match hint_s {
            Some(h) => self.project_near(q, h, 60.0),
            None => self.project(q),
        };
        let (a, b) = self.seg_ends(p.segment);
        let side = (b - a).cross(q - p.point).signum();
        (self.wrap_s(p.arc_s), side * p.distance)
    }

    /// Point at arc `s` displaced `n` meters to the left of travel.
    pub fn from_frenet(&self, s: f64, n: f64) -> Point {
        let h = self.heading_at(s);
        let p = self.point_at(s);
        Point::new(p.x - n * h.sin(), p.y + n * h.cos())
    }

    /// CSV export with columns `s,x,y,v`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,x,y,v\n");
        for (w, s) in self.waypoints.iter().zip(&self.cum_s) {
            let _ = writeln!(out, "{s},{},{},{}", w.x, w.y, w.v);
        }
        out
    }
}

/// Left (infield) and right (outfield) boundary loops.
#[derive(Debug, Clone)]
pub struct TrackBounds {
    pub left: Vec<Point>,
    pub right: Vec<Point>,
}

impl TrackBounds {
    /// True when `q` lies strictly between the two boundary loops.
    pub fn contains(&self, q: Point) -> bool {
        point_in_polygon(&self.right, q) != point_in_polygon(&self.left, q)
    }

    /// Distance from `q` to the nearer boundary.
    pub fn clearance(&self, q: Point) -> f64 {
        closest_on(&self.left, true, q).distance.min(closest_on(&self.right, true, q).distance)
    }
}

fn point_in_polygon(poly: &[Point], q: Point) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > q.y) != (b.y > q.y) && q.x < (b.x - a.x) * (q.y - a.y) / (b.y - a.y) + a.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassingZone {
    pub s_start: f64,
    pub s_end: f64,
}

/// Closed on the left, open on the right.
pub fn in_passing_zone(zones: &[PassingZone], arc_s: f64) -> bool {
    zones.iter().any(|z| arc_s >= z.s_start && arc_s < z.s_end)
}

/// Signed raceline distance from `ego` to `opp`; positive when the opponent
/// is ahead.
pub fn arc_separation(raceline: &Raceline, ego: Point, opp: Point) -> f64 {
    let se = raceline.project(ego).arc_s;
    let so = raceline.project(opp).arc_s;
    raceline.signed_gap(se, so)
}

/// A built track.
#[derive(Debug, Clone)]
pub struct Track {
    pub config: TrackConfig,
    pub raceline: Raceline,
    pub bounds: TrackBounds,
    pub zones: Vec<PassingZone>,
}

/// Stadium point at arc `u` (from the bottom-straight midpoint, CCW).
fn stadium_point(straight: f64, radius: f64, u: f64) -> (Point, bool) {
    let half = straight / 2.0;
    let arc = PI * radius;
    let total = 2.0 * straight + 2.0 * arc;
    let u = u.rem_euclid(total);
    if u < half {
        (Point::new(u, -radius), false)
    } else if u < half + arc {
        let a = -PI / 2.0 + (u - half) / radius;
        (Point::new(half + radius * a.cos(), radius * a.sin()), true)
    } else if u < half + arc + straight {
        (Point::new(half - (u - half - arc), radius), false)
    } else if u < half + 2.0 * arc + straight {
        let a = PI / 2.0 + (u - half - arc - straight) / radius;
        (Point::new(-half + radius * a.cos(), radius * a.sin()), true)
    } else {
        (Point::new(-half + (u - half - 2.0 * arc - straight), -radius), false)
    }
}

fn sample_stadium(straight: f64, radius: f64, spacing: f64) -> Vec<(Point, f64, bool)> {
    let total = 2.0 * straight + 2.0 * PI * radius;
    let n = (total / spacing).round().max(8.0) as usize;
    let step = total / n as f64;
    (0..n)
        .map(|i| {
            let u = i as f64 * step;
            let (p, curved) = stadium_point(straight, radius, u);
            (p, u, curved)
        })
        .collect()
}

/// Builds the oval raceline, its bounds and the two straight passing zones.
pub fn build_oval_track(config: &TrackConfig) -> Result<Track> {
    config.validate()?;
    let s_len = config.straight_length;
    let r_line = config.turn_radius - config.lane_offset;
    let arc = PI * r_line;
    let total = 2.0 * s_len + 2.0 * arc;
    let half = s_len / 2.0;
    // Straight-section boundaries along the raceline arc.
    let corners = [(half, half + arc), (half + arc + s_len, half + 2.0 * arc + s_len)];
    let speed = |u: f64, curved: bool| -> f64 {
        if curved {
            return config.corner_speed;
        }
        let mut d_min = f64::INFINITY;
        for (entry, exit) in corners {
            for edge in [entry, exit] {
                let d = (u - edge).rem_euclid(total).min((edge - u).rem_euclid(total));
                d_min = d_min.min(d);
            }
        }
        let blend = (d_min / config.speed_ramp).min(1.0);
        config.corner_speed + (config.straight_speed - config.corner_speed) * blend
    };
    let waypoints: Vec<Waypoint> = sample_stadium(s_len, r_line, config.waypoint_spacing)
        .into_iter()
        .map(|(p, u, curved)| Waypoint { x: p.x, y: p.y, v: speed(u, curved) })
        .collect();
    let raceline = Raceline::new(waypoints)?;
    let left = sample_stadium(s_len, config.turn_radius - config.track_width / 2.0, config.waypoint_spacing)
        .into_iter()
        .map(|(p, _, _)| p)
        .collect();
    let right = sample_stadium(s_len, config.turn_radius + config.track_width / 2.0, config.waypoint_spacing)
        .into_iter()
        .map(|(p, _, _)| p)
        .collect();
    let l = raceline.total_length();
    let zones = vec![
        PassingZone { s_start: 0.0, s_end: half },
        PassingZone { s_start: half + arc, s_end: half + arc + s_len },
        PassingZone { s_start: l - half, s_end: l },
    ];
    Ok(Track { config: config.clone(), raceline, bounds: TrackBounds { left, right }, zones })
}

impl Track {
    pub fn in_zone(&self, arc_s: f64) -> bool {
        in_passing_zone(&self.zones, self.raceline.wrap_s(arc_s))
    }
}
