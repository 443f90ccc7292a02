//! Fits a quintic between two boundary states, then builds an overtake from
//! guide points and reports the trapezoidal time model.

use argos::planner::{fit_quintic, overtake_times, plan_trajectory, BoundaryState, GuidePoint, OvertakeGeometry, PlanSource};
use argos::track::{build_oval_track, TrackConfig};
use argos::Point;

fn main() -> argos::Result<()> {
    let a = BoundaryState { pos: Point::new(0.0, 0.0), vel: Point::new(40.0, 0.0), acc: Point::new(0.0, 0.0) };
    let b = BoundaryState { pos: Point::new(80.0, 6.0), vel: Point::new(42.0, 0.0), acc: Point::new(0.0, 0.0) };
    let seg = fit_quintic(&a, &b, 2.0)?;
    for k in 0..=4 {
        let t = 0.5 * k as f64;
        let s = seg.at(t);
        println!("t {t:.1}: pos ({:>6.2}, {:>5.2}) vel ({:>5.2}, {:>5.2})", s.pos.x, s.pos.y, s.vel.x, s.vel.y);
    }

    let track = build_oval_track(&TrackConfig::default())?;
    let rl = &track.raceline;
    let guides: Vec<GuidePoint> = [(0.0, 0.0, 45.0), (60.0, 10.0, 52.0), (140.0, 10.0, 55.0), (220.0, 0.0, 52.0)]
        .iter()
        .map(|&(s, n, v)| GuidePoint::new(rl.from_frenet(s, n), v))
        .collect();
    let plan = plan_trajectory(&guides, 2.0, &track.bounds, PlanSource::Overtake)?;
    println!("overtake plan: {} waypoints, ends at {:.1} m/s", plan.waypoints.len(), plan.waypoints.last().map_or(0.0, |w| w.v));

    let g = OvertakeGeometry {
        y_gap: 10.0,
        theta1: 0.2,
        theta2: 0.2,
        car_length: 4.9,
        d_sep_front: 25.0,
        u_ego: 45.0,
        u_opp: 45.0,
        u_boost: 10.0,
        boost_fraction: 0.8,
    };
    let t = overtake_times(&g)?;
    println!("diverge {:.2} s, alongside {:.2} s, merge {:.2} s, total {:.2} s", t.t_a, t.t_b, t.t_c, t.total());
    Ok(())
}
