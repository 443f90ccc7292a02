//! Tracks one lap of the raceline from a 2 m lateral offset and reports the
//! lateral error as it decays.

use argos::track::{build_oval_track, TrackConfig};
use argos::tracker::{RefPath, Tracker, TrackerConfig};
use argos::vehicle::{step, Command, VehicleParams, VehicleState};

fn main() -> argos::Result<()> {
    let track = build_oval_track(&TrackConfig::default())?;
    let path = RefPath::from_raceline(&track.raceline);
    let params = VehicleParams::default();
    let config = TrackerConfig::default();
    let every = (config.dt / 0.02).round() as usize;
    let mut tracker = Tracker::new(config)?;
    let start = track.raceline.from_frenet(0.0, 2.0);
    let mut st = VehicleState { x: start.x, y: start.y, phi: track.raceline.heading_at(0.0), v: 40.0 };
    let mut cmd = Command::default();
    let mut s_prev = 0.0;
    for k in 0..6000 {
        if k % every == 0 {
            cmd = tracker.control(&path, &st, &params)?.0;
        }
        st = step(st, cmd, 0.02, &params, params.v_max)?;
        let (s, n) = path.project(st.pos(), Some(s_prev));
        if k % 500 == 0 {
            println!("t {:>5.1} s  s {:>7.1} m  lateral {:>6.3} m  v {:>4.1} m/s  a {:>5.2}  δ {:>6.3}", k as f64 * 0.02, s, n, st.v, cmd.a, cmd.delta);
        }
        s_prev = s;
    }
    Ok(())
}
