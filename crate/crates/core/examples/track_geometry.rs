//! Builds the default oval and prints its raceline, zones and a few Frenet
//! conversions.

use argos::track::{arc_separation, build_oval_track, TrackConfig};
use argos::Point;

fn main() -> argos::Result<()> {
    let track = build_oval_track(&TrackConfig::default())?;
    let rl = &track.raceline;
    println!("raceline: {} waypoints, {:.1} m per lap", rl.waypoints().len(), rl.total_length());
    for z in &track.zones {
        println!("passing zone: s = {:.1} .. {:.1}", z.s_start, z.s_end);
    }
    for s in [0.0, 400.0, 900.0, 1800.0] {
        let p = rl.point_at(s);
        println!(
            "s {s:>6.1}: ({:>7.1}, {:>7.1}) heading {:>5.2} target {:>4.1} m/s, in zone {}, wall clearance {:.1} m",
            p.x,
            p.y,
            rl.heading_at(s),
            rl.speed_at(s),
            track.in_zone(s),
            track.bounds.clearance(p)
        );
    }
    let q = rl.from_frenet(300.0, 4.0);
    let (s, n) = rl.frenet(q, None);
    println!("frenet round trip: (300.0, 4.0) -> ({s:.3}, {n:.3})");
    let gap = arc_separation(rl, rl.point_at(100.0), rl.point_at(140.0));
    println!("signed separation from s=100 to s=140: {gap:.1} m");
    println!("origin inside bounds: {}", track.bounds.contains(Point::new(0.0, 0.0)));
    Ok(())
}
