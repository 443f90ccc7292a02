//! Drives the kinematic bicycle through a constant-steer circle and a boosted
//! straight, draining the boost reservoir along the way.

use argos::vehicle::{aems_drain, aems_lap_reset, speed_limit, step, AemsReservoir, Command, VehicleParams, VehicleState};

fn main() -> argos::Result<()> {
    let p = VehicleParams::default();
    let delta: f64 = 0.08;
    let mut st = VehicleState { v: 20.0, ..Default::default() };
    let mut max_y: f64 = 0.0;
    for _ in 0..3000 {
        st = step(st, Command { a: 0.0, delta }, 0.02, &p, p.v_max)?;
        max_y = max_y.max(st.y);
    }
    println!("constant steer {delta} rad: diameter {:.2} m, expected {:.2} m", max_y, 2.0 * p.wheelbase / delta.tan());

    let mut res = AemsReservoir::default();
    res.drain_active = true;
    let mut st = VehicleState { v: 45.0, ..Default::default() };
    for k in 0..1500 {
        let cap = speed_limit(&p, &res, 100.0);
        st = step(st, Command { a: p.a_max, delta: 0.0 }, 0.02, &p, cap)?;
        res = aems_drain(res, 0.02);
        if k % 250 == 0 {
            println!("t {:>5.1} s  v {:>5.1} m/s  cap {:>5.1}  budget {:>5.2} s", k as f64 * 0.02, st.v, cap, res.budget);
        }
    }
    println!("after a lap the budget resets to {:.1} s", aems_lap_reset(res).budget);
    Ok(())
}
