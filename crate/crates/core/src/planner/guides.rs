//! Guide points for the overtake envelope and the superprojection block.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::track::geometry::{closest_on, farther_of, offset_toward, project_along, Point};
use crate::track::Track;
use crate::vehicle::VehicleState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OvertakeGuides {
    pub g0: Point,
    pub g1: Point,
    pub g2: Point,
    pub g3: Point,
}

impl OvertakeGuides {
    pub fn points(&self) -> [Point; 4] {
        [self.g0, self.g1, self.g2, self.g3]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefenseGuides {
    pub i0: Point,
    pub i1: Point,
    pub i2: Point,
    /// Pose `k·L_CD` ahead of the opponent's projection that the defender
    /// aims to occupy first.
    pub superprojection: Point,
}

/// Geometric constants shared by both guide generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuideGeometry {
    /// Forward offset of the second overtake guide (wheelbase), m.
    pub wheelbase: f64,
    /// Car length, m.
    pub car_length: f64,
    /// Lateral offset used by the `h` helper, m.
    pub lateral_offset: f64,
}

/// Default lateral offset: at least the minimum lateral separation, and 60%
/// of the half width on wide tracks.
pub fn default_lateral_offset(min_lateral_separation: f64, track_width: f64) -> f64 {
    min_lateral_separation.max(0.6 * track_width / 2.0)
}

/// Boundary loop selected by `j(R, B_L, B_R)`: the one whose closest point
/// is farther from `anchor`, the right loop on ties.
fn roomier_boundary(track: &Track, anchor: Point) -> &[Point] {
    let left = closest_on(&track.bounds.left, true, anchor).point;
    let right = closest_on(&track.bounds.right, true, anchor).point;
    if farther_of(anchor, left, right) == left {
        &track.bounds.left
    } else {
        &track.bounds.right
    }
}

fn ensure_inside(track: &Track, name: &str, p: Point) -> Result<()> {
    if track.bounds.contains(p) {
        Ok(())
    } else {
        Err(Error::InfeasiblePlan(format!("guide {name} at ({:.2}, {:.2}) lies outside the track", p.x, p.y)))
    }
}

/// Four-point overtake envelope around the opponent.
///
/// `g0` is the ego's raceline projection, `g1` sits `d` toward the roomier
/// boundary from the opponent, `g2` does the same one wheelbase ahead, and
/// `g3` returns to the raceline a wheelbase plus a car length ahead.
pub fn overtake_guides(ego: &VehicleState, opp: &VehicleState, track: &Track, geom: &GuideGeometry) -> Result<OvertakeGuides> {
    let rl = &track.raceline;
    let r_opp = opp.pos();
    let g0 = rl.project(ego.pos()).point;
    let side = roomier_boundary(track, r_opp);
    let g1 = offset_toward(r_opp, closest_on(side, true, r_opp).point, geom.lateral_offset)?;
    let ahead = project_along(r_opp, opp.phi, geom.wheelbase);
    let g2 = offset_toward(ahead, closest_on(side, true, ahead).point, geom.lateral_offset)?;
    let g3 = rl.project(project_along(r_opp, opp.phi, geom.wheelbase + geom.car_length)).point;
    ensure_inside(track, "g1", g1)?;
    ensure_inside(track, "g2", g2)?;
    Ok(OvertakeGuides { g0, g1, g2, g3 })
}

/// Three-point superprojection block.
///
/// `i1` is the opponent's pose projected `v·T_p` along its heading (offset
/// `d` toward the roomier boundary, usually zero), and `i2` rejoins the
/// raceline a car length beyond that projection.
pub fn defense_guides(
    ego: &VehicleState,
    opp: &VehicleState,
    track: &Track,
    horizon: f64,
    k_mult: f64,
    geom: &GuideGeometry,
) -> Result<DefenseGuides> {
    if !(horizon > 0.0) {
        return Err(Error::Parameter(format!("projection horizon must be positive, got {horizon}")));
    }
    if !(k_mult >= 0.0) {
        return Err(Error::Parameter("superprojection multiple must be non-negative".into()));
    }
    let rl = &track.raceline;
    let r_opp = opp.pos();
    let reach = opp.v * horizon;
    let i0 = rl.project(ego.pos()).point;
    let projected = project_along(r_opp, opp.phi, reach);
    let i1 = if geom.lateral_offset == 0.0 {
        projected
    } else {
        let side = roomier_boundary(track, r_opp);
        offset_toward(projected, closest_on(side, true, projected).point, geom.lateral_offset)?
    };
    let superprojection = project_along(i1, opp.phi, k_mult * geom.car_length);
    let i2 = rl.project(project_along(r_opp, opp.phi, reach + geom.car_length)).point;
    ensure_inside(track, "i1", i1)?;
    Ok(DefenseGuides { i0, i1, i2, superprojection })
}
