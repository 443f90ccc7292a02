//! Piecewise quintic paths through guide points, resampled by arc length.

use serde::{Deserialize, Serialize};

use super::quintic::{fit_quintic, BoundaryState, QuinticSegment};
use crate::error::{Error, Result};
use crate::track::geometry::Point;
use crate::track::{TrackBounds, Waypoint};

/// A guide point with the speed to hold there and, optionally, a fixed
/// heading. Without a heading the joint direction follows the neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidePoint {
    pub pos: Point,
    pub heading: Option<f64>,
    pub speed: f64,
}

impl GuidePoint {
    pub fn new(pos: Point, speed: f64) -> Self {
        Self { pos, heading: None, speed }
    }

    pub fn with_heading(pos: Point, heading: f64, speed: f64) -> Self {
        Self { pos, heading: Some(heading), speed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanSource {
    Overtake,
    Defense,
    /// Speed-reduced return behind the opponent (Abandon / Fallback).
    Merge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerOutput {
    pub waypoints: Vec<Waypoint>,
    pub source: PlanSource,
}

fn unit(p: Point) -> Option<Point> {
    let n = p.norm();
    (n > 0.0).then(|| p * (1.0 / n))
}

fn joint_direction(guides: &[GuidePoint], i: usize) -> Result<Point> {
    if let Some(h) = guides[i].heading {
        return Ok(Point::new(h.cos(), h.sin()));
    }
    let prev = guides[i.saturating_sub(1)].pos;
    let next = guides[(i + 1).min(guides.len() - 1)].pos;
    unit(next - prev).ok_or(Error::DegenerateDirection)
}

/// Fits one quintic per consecutive guide pair.
///
/// Each joint carries velocity `speed · direction` and zero acceleration, so
/// the path is C² by construction. Segment durations are chord over mean
/// endpoint speed.
pub fn fit_guides(guides: &[GuidePoint]) -> Result<Vec<QuinticSegment>> {
    if guides.len() < 2 {
        return Err(Error::Parameter(format!("need at least two guide points, got {}", guides.len())));
    }
    for (i, g) in guides.iter().enumerate() {
        if !(g.pos.is_finite() && g.speed > 0.0 && g.speed.is_finite()) {
            return Err(Error::Parameter(format!("guide {i} needs a finite position and positive speed")));
        }
    }
    let states = (0..guides.len())
        .map(|i| {
            Ok(BoundaryState {
                pos: guides[i].pos,
                vel: joint_direction(guides, i)? * guides[i].speed,
                acc: Point::default(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    guides
        .windows(2)
        .zip(states.windows(2))
        .map(|(g, s)| {
            let chord = g[0].pos.dist(g[1].pos);
            if chord == 0.0 {
                return Err(Error::Parameter("consecutive guide points coincide".into()));
            }
            fit_quintic(&s[0], &s[1], chord / (0.5 * (g[0].speed + g[1].speed)))
        })
        .collect()
}

/// Dense samples per segment used for arc-length integration.
const SUBSTEPS: usize = 400;

/// Fits the guides and resamples the path every `sample_step` meters of arc
/// length. Speeds interpolate linearly in arc length between guide speeds.
/// Any sample outside `bounds` rejects the whole plan.
pub fn plan_trajectory(guides: &[GuidePoint], sample_step: f64, bounds: &TrackBounds, source: PlanSource) -> Result<PlannerOutput> {
    if !(sample_step > 0.0) {
        return Err(Error::Parameter(format!("sample step must be positive, got {sample_step}")));
    }
    let segments = fit_guides(guides)?;
    let mut out = Vec::new();
    let mut next_emit = 0.0;
    let mut s_total = 0.0;
    for (k, seg) in segments.iter().enumerate() {
        // Arc length inside this segment, integrated on a fine grid.
        let mut pts = Vec::with_capacity(SUBSTEPS + 1);
        let mut arcs = Vec::with_capacity(SUBSTEPS + 1);
        let mut acc = 0.0;
        let mut prev = seg.at(0.0).pos;
        for j in 0..=SUBSTEPS {
            let p = seg.at(seg.duration * j as f64 / SUBSTEPS as f64).pos;
            acc += p.dist(prev);
            prev = p;
            pts.push(p);
            arcs.push(acc);
        }
        let seg_len = acc;
        let (v0, v1) = (guides[k].speed, guides[k + 1].speed);
        let mut j = 0;
        while next_emit <= s_total + seg_len + 1e-12 {
            let local = next_emit - s_total;
            while j + 1 < arcs.len() && arcs[j + 1] < local {
                j += 1;
            }
            let p = if j + 1 < arcs.len() {
                let span = arcs[j + 1] - arcs[j];
                let w = if span > 0.0 { ((local - arcs[j]) / span).clamp(0.0, 1.0) } else { 0.0 };
                pts[j] + (pts[j + 1] - pts[j]) * w
            } else {
                pts[j]
            };
            let frac = if seg_len > 0.0 { (local / seg_len).clamp(0.0, 1.0) } else { 1.0 };
            out.push(Waypoint { x: p.x, y: p.y, v: v0 + (v1 - v0) * frac });
            next_emit += sample_step;
        }
        s_total += seg_len;
    }
    let last = guides[guides.len() - 1];
    if out.last().map_or(true, |w| w.pos().dist(last.pos) > 1e-9) {
        out.push(Waypoint { x: last.pos.x, y: last.pos.y, v: last.speed });
    }
    if let Some(bad) = out.iter().find(|w| !bounds.contains(w.pos())) {
        return Err(Error::InfeasiblePlan(format!("sample at ({:.2}, {:.2}) leaves the track", bad.x, bad.y)));
    }
    Ok(PlannerOutput { waypoints: out, source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::guides::{overtake_guides, GuideGeometry};
    use crate::track::{build_oval_track, Track, TrackConfig};
    use crate::vehicle::VehicleState;

    fn track() -> Track {
        build_oval_track(&TrackConfig { straight_length: 600.0, track_width: 30.0, lane_offset: 0.0, ..Default::default() }).unwrap()
    }

    #[test]
    fn straight_pair_is_straight() {
        let t = track();
        let g = [GuidePoint::new(Point::new(0.0, -200.0), 20.0), GuidePoint::new(Point::new(50.0, -200.0), 20.0)];
        let plan = plan_trajectory(&g, 1.0, &t.bounds, PlanSource::Overtake).unwrap();
        assert_eq!(plan.waypoints.len(), 51);
        for (i, w) in plan.waypoints.iter().enumerate() {
            assert!((w.y + 200.0).abs() < 1e-9);
            assert!((w.x - i as f64).abs() < 1e-3);
            assert!((w.v - 20.0).abs() < 1e-12);
        }
    }

    #[test]
    fn joints_are_c2() {
        let g = [
            GuidePoint::new(Point::new(0.0, 0.0), 30.0),
            GuidePoint::new(Point::new(40.0, 8.0), 35.0),
            GuidePoint::new(Point::new(70.0, 9.0), 40.0),
            GuidePoint::with_heading(Point::new(110.0, 0.0), 0.0, 40.0),
        ];
        let segs = fit_guides(&g).unwrap();
        for w in segs.windows(2) {
            let a = w[0].at(w[0].duration);
            let b = w[1].at(0.0);
            assert!(a.pos.dist(b.pos) < 1e-6);
            assert!(a.vel.dist(b.vel) < 1e-6);
            assert!(a.acc.dist(b.acc) < 1e-6);
        }
    }

    #[test]
    fn overtake_envelope_reaches_offset() {
        let t = track();
        let rl = &t.raceline;
        let d = 9.0;
        let at = |s: f64, v: f64| {
            let p = rl.point_at(s);
            VehicleState { x: p.x, y: p.y, phi: rl.heading_at(s), v }
        };
        let opp = at(200.0, 40.0);
        let ego = at(150.0, 45.0);
        // Spread the envelope the way a moving opponent would: g1 and g2 use
        // the opponent predicted forward, g3 well ahead.
        let geom = GuideGeometry { wheelbase: 30.0, car_length: 30.0, lateral_offset: d };
        let og = overtake_guides(&ego, &opp, &t, &geom).unwrap();
        let h = opp.phi;
        let guides = [
            GuidePoint::with_heading(og.g0, h, 45.0),
            GuidePoint::with_heading(og.g1, h, 45.0),
            GuidePoint::with_heading(og.g2, h, 45.0),
            GuidePoint::with_heading(og.g3, h, 45.0),
        ];
        let plan = plan_trajectory(&guides, 0.5, &t.bounds, PlanSource::Overtake).unwrap();
        let max_lat = plan.waypoints.iter().map(|w| (w.y - opp.y).abs()).fold(0.0, f64::max);
        assert!((max_lat - d).abs() <= 0.05 * d, "max lateral {max_lat}");
        // Clearance to the opponent's pose.
        let min_gap = plan.waypoints.iter().map(|w| w.pos().dist(opp.pos())).fold(f64::INFINITY, f64::min);
        assert!(min_gap >= d - 0.1, "min gap {min_gap}");
        // Progress along the raceline.
        let mut last = -1.0;
        for w in &plan.waypoints {
            let s = rl.project(w.pos()).arc_s;
            assert!(s > last);
            last = s;
        }
        for w in plan.waypoints.windows(2) {
            assert!(w[0].pos().dist(w[1].pos()) <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn leaving_bounds_is_rejected() {
        let t = track();
        let g = [GuidePoint::new(Point::new(0.0, -200.0), 20.0), GuidePoint::new(Point::new(50.0, -230.0), 20.0)];
        assert!(matches!(plan_trajectory(&g, 1.0, &t.bounds, PlanSource::Defense), Err(Error::InfeasiblePlan(_))));
    }

    #[test]
    fn rejects_single_guide() {
        let t = track();
        let g = [GuidePoint::new(Point::new(0.0, -200.0), 20.0)];
        assert!(matches!(plan_trajectory(&g, 1.0, &t.bounds, PlanSource::Overtake), Err(Error::Parameter(_))));
    }
}
