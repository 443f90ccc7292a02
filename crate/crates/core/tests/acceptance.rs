//! End-to-end acceptance criteria. Runs as a plain binary so every criterion
//! prints its own pass/fail line.

use std::path::PathBuf;
use std::process::Command as Process;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use argos::automata::FscTag;
use argos::harness::{kendall_tau, parse_log, run_sweep, simulate, verify_log_text, LogEvent, RaceOutcome, ScenarioConfig, SweepConfig};
use argos::planner::{fit_quintic, BoundaryState};
use argos::race_control::boost_allowed;
use argos::track::{build_oval_track, TrackConfig, Waypoint};
use argos::tracker::{solve, trajectory_cost, RefPath, ReferenceWindow, Tracker, TrackerConfig};
use argos::vehicle::{aems_drain, aems_lap_reset, step, AemsReservoir, Command, VehicleParams, VehicleState, DEFAULT_LAP_GRANT};
use argos::verification::{tally, ManeuverKind, ManeuverTrace, Outcome};
use argos::Point;

const CORPUS_SEEDS: u64 = 100;
const GOLDEN_SEEDS: u64 = 10;

fn config(name: &str) -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../config").join(name);
    ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

struct Corpus {
    runs: Vec<RaceOutcome>,
    elapsed: Duration,
}

fn corpus() -> Corpus {
    let base = config("argos_vs_argos.toml");
    assert_eq!(base.laps, 5);
    assert!(base.full_framework());
    let t0 = Instant::now();
    let runs = (0..CORPUS_SEEDS)
        .map(|seed| simulate(&ScenarioConfig { seed, ..base.clone() }).expect("corpus race runs"))
        .collect();
    Corpus { runs, elapsed: t0.elapsed() }
}

type Check = Result<String, String>;

fn ensure(ok: bool, pass: String, fail: String) -> Check {
    if ok {
        Ok(pass)
    } else {
        Err(fail)
    }
}

fn fsc_closure(c: &Corpus) -> Check {
    let ticks: u64 = c.runs.iter().map(|r| r.summary.ticks).sum();
    let invalid: u64 = c.runs.iter().flat_map(|r| r.summary.cars.iter().map(|k| k.invalid_fsc_ticks)).sum();
    let stream_bad = c.runs.iter().filter(|r| !r.summary.verdict.fsc_valid).count();
    let budget = Duration::from_secs(15 * 60);
    ensure(
        invalid == 0 && stream_bad == 0 && c.elapsed < budget,
        format!("{} races, {ticks} ticks, 0 invalid, {:.0} s", c.runs.len(), c.elapsed.as_secs_f64()),
        format!("{invalid} invalid ticks, {stream_bad} invalid streams, {:.0} s", c.elapsed.as_secs_f64()),
    )
}

fn sequence_totality(c: &Corpus) -> Check {
    let completed: u64 = c
        .runs
        .iter()
        .flat_map(|r| r.summary.verdict.counters.iter().map(|k| k.n_ot3 + k.n_ot45 + k.n_df3 + k.n_df45))
        .sum();
    let bad: usize = c.runs.iter().map(|r| r.summary.verdict.counterexamples.len()).sum();
    ensure(bad == 0 && completed > 0, format!("{completed} completed traces, 0 counterexamples"), format!("{bad} counterexamples"))
}

fn published_tallies() -> bool {
    let mk = |kind, outcome, n| vec![ManeuverTrace { car: 0, kind, sequence: vec![], outcome, t_start: 0.0, t_end: 0.0, active: None }; n];
    let ot = [mk(ManeuverKind::Overtake, Outcome::Success, 3), mk(ManeuverKind::Overtake, Outcome::Failed, 21), mk(ManeuverKind::Overtake, Outcome::Dnf, 2)]
        .concat();
    let df = [mk(ManeuverKind::Defense, Outcome::Success, 5), mk(ManeuverKind::Defense, Outcome::Failed, 3), mk(ManeuverKind::Defense, Outcome::Dnf, 1)]
        .concat();
    let a = tally(&ot, (0, 0));
    let b = tally(&df, (0, 0));
    a.n_ot2 == 26 && (a.n_ot3, a.n_ot45, a.n_ot_dnf) == (3, 21, 2) && a.conserved() && b.n_df2 == 9 && (b.n_df3, b.n_df45, b.n_df_dnf) == (5, 3, 1) && b.conserved()
}

fn conservation(c: &Corpus) -> Check {
    let bad = c.runs.iter().filter(|r| !r.summary.cars.iter().all(|k| k.counters.conserved())).count();
    let fig = published_tallies();
    ensure(bad == 0 && fig, format!("{} sessions conserve; 26 = 3 + 21 + 2 and 9 = 5 + 3 + 1", c.runs.len()), format!("{bad} sessions break conservation, figures {fig}"))
}

fn cross_check(c: &Corpus) -> Check {
    let bad: Vec<u64> = c.runs.iter().filter(|r| r.summary.verdict.cross_check_ok != Some(true)).map(|r| r.summary.seed).collect();
    let engaged: u64 = c.runs.iter().flat_map(|r| r.summary.verdict.engaged.iter().map(|k| k.n_ot3)).sum();
    ensure(bad.is_empty() && engaged > 0, format!("{engaged} engaged overtakes matched on every seed"), format!("mismatch on seeds {bad:?}"))
}

/// Full 6×6 boundary system solved by Gaussian elimination.
fn quintic_oracle(b: [f64; 6], t: f64) -> [f64; 6] {
    let row = |k: usize, tt: f64| -> [f64; 6] {
        std::array::from_fn(|n| match k {
            0 => tt.powi(n as i32),
            1 if n >= 1 => n as f64 * tt.powi(n as i32 - 1),
            2 if n >= 2 => (n * (n - 1)) as f64 * tt.powi(n as i32 - 2),
            _ => 0.0,
        })
    };
    let mut m = [row(0, 0.0), row(1, 0.0), row(2, 0.0), row(0, t), row(1, t), row(2, t)];
    let mut b = b;
    for col in 0..6 {
        let piv = (col..6).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..6 {
            let f = m[r][col] / m[col][col];
            for c in col..6 {
                m[r][c] -= f * m[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 6];
    for r in (0..6).rev() {
        let tail: f64 = (r + 1..6).map(|c| m[r][c] * x[c]).sum();
        x[r] = (b[r] - tail) / m[r][r];
    }
    x
}

fn quintic() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut worst_fit, mut worst_coef) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let mut p = || Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let a = BoundaryState { pos: p(), vel: p(), acc: p() };
        let b = BoundaryState { pos: p(), vel: p(), acc: p() };
        let t = rng.gen_range(0.5..2.0);
        let q = fit_quintic(&a, &b, t).unwrap();
        for (got, want) in [(q.at(0.0), a), (q.at(t), b)] {
            worst_fit = worst_fit.max(got.pos.dist(want.pos)).max(got.vel.dist(want.vel)).max(got.acc.dist(want.acc));
        }
        let ox = quintic_oracle([a.pos.x, a.vel.x, a.acc.x, b.pos.x, b.vel.x, b.acc.x], t);
        let oy = quintic_oracle([a.pos.y, a.vel.y, a.acc.y, b.pos.y, b.vel.y, b.acc.y], t);
        for n in 0..6 {
            worst_coef = worst_coef.max((q.x[n] - ox[n]).abs()).max((q.y[n] - oy[n]).abs());
        }
    }
    ensure(
        worst_fit <= 1e-9 && worst_coef <= 1e-8,
        format!("1000 fits, boundary error {worst_fit:.1e}, coefficient error {worst_coef:.1e}"),
        format!("boundary error {worst_fit:.1e}, coefficient error {worst_coef:.1e}"),
    )
}

fn rollout(z0: &VehicleState, us: &[Command], dt: f64, wb: f64) -> Vec<VehicleState> {
    let mut zs = vec![*z0];
    for u in us {
        let z = *zs.last().unwrap();
        zs.push(VehicleState {
            x: z.x + z.v * z.phi.cos() * dt,
            y: z.y + z.v * z.phi.sin() * dt,
            phi: z.phi + z.v * u.delta.tan() / wb * dt,
            v: z.v + u.a * dt,
        });
    }
    zs
}

/// Exhaustive search over 5 acceleration × 5 steering levels per step.
fn grid_cost(z0: &VehicleState, w: &ReferenceWindow, cfg: &TrackerConfig, p: &VehicleParams) -> f64 {
    let lv = |lo: f64, hi: f64| (0..5).map(move |i| lo + (hi - lo) * i as f64 / 4.0);
    let levels: Vec<Command> = lv(p.a_min, p.a_max).flat_map(|a| lv(p.delta_min, p.delta_max).map(move |delta| Command { a, delta })).collect();
    let mut best = f64::INFINITY;
    for &u0 in &levels {
        for &u1 in &levels {
            for &u2 in &levels {
                let us = [u0, u1, u2];
                best = best.min(trajectory_cost(&rollout(z0, &us, cfg.dt, p.wheelbase), &us, w, cfg));
            }
        }
    }
    best
}

fn mpc() -> Check {
    let cfg = TrackerConfig { horizon_steps: 3, ..TrackerConfig::default() };
    let p = VehicleParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let z0 = VehicleState { x: rng.gen_range(-3.0..3.0), y: rng.gen_range(-3.0..3.0), phi: rng.gen_range(-0.3..0.3), v: rng.gen_range(5.0..40.0) };
        let vr: f64 = (z0.v + rng.gen_range(-5.0..5.0)).max(0.0);
        let curv = rng.gen_range(-0.02..0.02);
        let states = (0..4)
            .map(|k| {
                let s = vr * cfg.dt * k as f64;
                VehicleState { x: s, y: 0.5 * curv * s * s, phi: curv * s, v: vr }
            })
            .collect();
        let w = ReferenceWindow { states };
        let sol = solve(&z0, &w, &cfg, &p, None).unwrap();
        let oracle = grid_cost(&z0, &w, &cfg, &p);
        worst = worst.max(sol.cost / oracle.max(1e-12));
    }
    let on_ref = VehicleState { x: 0.0, y: 0.0, phi: 0.0, v: 20.0 };
    let states = (0..=cfg.horizon_steps).map(|k| VehicleState { x: 20.0 * cfg.dt * k as f64, ..on_ref }).collect();
    let sol = solve(&on_ref, &ReferenceWindow { states }, &cfg, &p, None).unwrap();
    let u = sol.commands[0];
    ensure(
        worst <= 1.05 && u.a.abs() < 0.05 && u.delta.abs() < 0.005,
        format!("200 instances, worst cost ratio {worst:.4}; on-reference |a| {:.1e}, |δ| {:.1e}", u.a.abs(), u.delta.abs()),
        format!("worst ratio {worst:.4}, on-reference a {} δ {}", u.a, u.delta),
    )
}

fn tracking() -> Check {
    let track = build_oval_track(&TrackConfig::default()).unwrap();
    let wps: Vec<Waypoint> = track.raceline.waypoints().iter().map(|w| Waypoint { v: 30.0, ..*w }).collect();
    let path = RefPath::closed(&wps).unwrap();
    let params = VehicleParams::default();
    let cfg = config("long_race.toml").cars[0].tracker.clone();
    let mut tracker = Tracker::new(cfg).unwrap();
    let (p0, h0, _) = path.sample(0.0);
    let mut st = VehicleState { x: p0.x, y: p0.y, phi: h0, v: 30.0 };
    let (mut sq, mut n, mut travelled, mut k) = (0.0, 0usize, 0.0, 0usize);
    let mut cmd = Command::default();
    while travelled < path.length() {
        if k % 5 == 0 {
            cmd = tracker.control(&path, &st, &params).unwrap().0;
        }
        let next = step(st, cmd, 0.02, &params, params.v_max).unwrap();
        travelled += next.pos().dist(st.pos());
        st = next;
        let (_, lat) = path.project(st.pos(), None);
        sq += lat * lat;
        n += 1;
        k += 1;
    }
    let rms = (sq / n as f64).sqrt();
    ensure(rms <= 0.5, format!("one lap at 30 m/s, RMS lateral error {rms:.3} m"), format!("RMS lateral error {rms:.3} m"))
}

fn kinematics() -> Check {
    let p = VehicleParams::default();
    let delta = 0.1;
    let mut st = VehicleState { x: 0.0, y: 0.0, phi: 0.0, v: 10.0 };
    let cmd = Command { a: 0.0, delta };
    let mut pts = Vec::new();
    for _ in 0..2000 {
        st = step(st, cmd, 0.02, &p, p.v_max).unwrap();
        pts.push(st.pos());
    }
    // Circle through three well-separated samples.
    let (a, b, c) = (pts[100], pts[400], pts[700]);
    let d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
    let sq = |q: Point| q.x * q.x + q.y * q.y;
    let ux = (sq(a) * (b.y - c.y) + sq(b) * (c.y - a.y) + sq(c) * (a.y - b.y)) / d;
    let uy = (sq(a) * (c.x - b.x) + sq(b) * (a.x - c.x) + sq(c) * (b.x - a.x)) / d;
    let radius = a.dist(Point::new(ux, uy));
    let expected = p.wheelbase / delta.tan();
    let circle_err = (radius - expected).abs() / expected;
    // Euler holds each step's speed for the whole step, so the distance it
    // must reproduce is the integral of that held signal.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut st = VehicleState { x: 0.0, y: 0.0, phi: 0.0, v: 5.0 };
    let mut integral = 0.0;
    for _ in 0..500 {
        let cmd = Command { a: rng.gen_range(-3.0..3.0), delta: 0.0 };
        integral += st.v * 0.02;
        st = step(st, cmd, 0.02, &p, p.v_max).unwrap();
    }
    let mut cruise = VehicleState { x: 0.0, y: 0.0, phi: 0.0, v: 37.0 };
    for _ in 0..500 {
        cruise = step(cruise, Command::default(), 0.02, &p, p.v_max).unwrap();
    }
    let cruise_err = (cruise.x - 37.0 * 10.0).abs() / 370.0;
    let line_err = ((st.x - integral).abs() / integral).max(cruise_err);
    ensure(
        circle_err <= 0.005 && line_err <= 1e-6,
        format!("circle radius error {:.3}%, straight distance error {line_err:.1e}", circle_err * 100.0),
        format!("circle radius error {:.3}%, straight distance error {line_err:.1e}", circle_err * 100.0),
    )
}

fn aems(c: &Corpus) -> Check {
    let min_budget = c.runs.iter().flat_map(|r| r.summary.cars.iter().map(|k| k.min_budget)).fold(f64::INFINITY, f64::min);
    let outside: f64 = c.runs.iter().flat_map(|r| r.summary.cars.iter().map(|k| k.boost_outside_zone)).sum();
    let mut res = AemsReservoir::new(DEFAULT_LAP_GRANT);
    res.drain_active = true;
    let mut resets_ok = true;
    for k in 0..50 {
        for _ in 0..k * 7 {
            res = aems_drain(res, 0.02);
        }
        res = aems_lap_reset(res);
        resets_ok &= res.budget == 20.0;
        res.drain_active = true;
    }
    let track = build_oval_track(&TrackConfig::default()).unwrap();
    let lap = track.raceline.total_length();
    let mut fixtures = 0;
    let mut denials = true;
    for k in 0..2000 {
        let s = lap * k as f64 / 2000.0;
        if !track.in_zone(s) {
            fixtures += 1;
            denials &= !boost_allowed(true, false) && !boost_allowed(true, track.in_zone(s));
        }
    }
    denials &= fixtures > 0 && !boost_allowed(false, true) && boost_allowed(true, true);
    // Every lap change in the corpus odometry must show a full reservoir,
    // less at most the boost drained since the reset (rows are 0.1 s apart).
    let mut in_race_resets = 0;
    for run in &c.runs {
        let mut last_lap = [0u32; 2];
        for row in run.odometry.lines().skip(1) {
            let f: Vec<&str> = row.split(',').collect();
            let (car, lap, budget): (usize, u32, f64) = (f[1].parse().unwrap(), f[8].parse().unwrap(), f[9].parse().unwrap());
            if lap != last_lap[car] {
                in_race_resets += 1;
                resets_ok &= budget >= 20.0 - 0.1 - 1e-9 && budget <= 20.0;
                last_lap[car] = lap;
            }
        }
    }
    let grant = config("long_race.toml").rules.boost_grant == 20.0;
    ensure(
        min_budget >= 0.0 && outside == 0.0 && resets_ok && denials && grant,
        format!("lowest budget {min_budget:.2} s, {in_race_resets} lap resets to 20.0 s, 0 s boosted outside zones, {fixtures} denial fixtures"),
        format!("lowest budget {min_budget}, outside {outside}, resets {resets_ok}, denials {denials}, grant {grant}"),
    )
}

/// State combination of `car` in force at time `t`.
fn fsc_at(events: &[LogEvent], car: usize, t: f64) -> Option<Option<FscTag>> {
    let log: String = events.iter().filter(|e| e.car == car && e.kind == "fsc" && e.t <= t + 1e-9).map(|e| e.to_line() + "\n").collect();
    parse_log(&log).ok()?.trace.last().map(|e| e.fsc)
}

fn rules(c: &Corpus) -> Check {
    let golden = config("golden_mule.toml");
    let mut r3 = 0;
    let mut min_clear = f64::INFINITY;
    for seed in 0..GOLDEN_SEEDS {
        let s = simulate(&ScenarioConfig { seed, ..golden.clone() }).unwrap().summary;
        r3 += s.violations.iter().filter(|v| v.rule == argos::race_control::Rule::R3).count();
        min_clear = min_clear.min(s.min_clearance);
    }
    let mut forced = 0;
    let mut illegal = 0;
    for run in &c.runs {
        let log = parse_log(&run.log).unwrap();
        for v in log.events.iter().filter(|e| e.kind == "violation") {
            let rule = v.payload.get("rule").and_then(|r| r.as_str()).unwrap_or("");
            if rule == "R2" || rule == "R5" {
                forced += 1;
                if !matches!(fsc_at(&log.events, v.car, v.t + 0.02), Some(Some(_))) {
                    illegal += 1;
                }
            }
        }
    }
    ensure(
        r3 == 0 && min_clear >= 7.5 && illegal == 0,
        format!("golden mule: 0 R3 over {GOLDEN_SEEDS} seeds, min clearance {min_clear:.2} m; {forced} forced R2/R5 events all legal next tick"),
        format!("{r3} R3 violations, min clearance {min_clear:.2} m, {illegal} of {forced} forced events illegal"),
    )
}

fn determinism(c: &Corpus) -> Check {
    let golden = config("golden_mule.toml");
    let a = simulate(&golden).unwrap();
    let b = simulate(&golden).unwrap();
    let duel = ScenarioConfig { seed: 3, ..config("argos_vs_argos.toml") };
    let identical = a.log == b.log && c.runs[3].log == simulate(&duel).unwrap().log;
    let reverified = c.runs.iter().all(|r| verify_log_text(&r.log).map_or(false, |v| v == r.summary.verdict && v.passed()));
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("events.jsonl");
    std::fs::write(&log, &a.log).unwrap();
    let status = Process::new(env!("CARGO_BIN_EXE_argos")).arg("verify").arg(&log).output().unwrap().status;
    ensure(
        identical && reverified && status.code() == Some(0),
        "repeat runs byte-identical; every log re-verifies to its summary; verify exits 0".into(),
        format!("identical {identical}, reverified {reverified}, verify exit {:?}", status.code()),
    )
}

fn sweeps() -> Check {
    let base = config("golden_mule.toml");
    let run = |axis: &str, values: Vec<f64>| {
        let rows = run_sweep(&SweepConfig { base: base.clone(), axis: axis.into(), values, seeds_per_value: 30 }).unwrap();
        let xs: Vec<f64> = rows.iter().map(|r| r.value).collect();
        let ps: Vec<f64> = rows.iter().map(|r| r.p_overtake).collect();
        (kendall_tau(&xs, &ps), ps)
    };
    let (tau_gap, p_gap) = run("initial_gap", vec![40.0, 80.0, 160.0, 320.0, 640.0]);
    let (tau_boost, p_boost) = run("rules.boost_grant", vec![2.0, 4.0, 6.0, 8.0, 20.0]);
    ensure(
        tau_gap <= 0.0 && tau_boost >= 0.0,
        format!("gap τ {tau_gap:.2} p {p_gap:?}; boost τ {tau_boost:.2} p {p_boost:?}"),
        format!("gap τ {tau_gap:.2} p {p_gap:?}; boost τ {tau_boost:.2} p {p_boost:?}"),
    )
}

fn main() {
    let t0 = Instant::now();
    let corpus = corpus();
    let results: Vec<(&str, Check)> = vec![
        ("1 fsc closure", fsc_closure(&corpus)),
        ("2 sequence totality", sequence_totality(&corpus)),
        ("3 conservation", conservation(&corpus)),
        ("4 cross-check symmetry", cross_check(&corpus)),
        ("5 quintic correctness", quintic()),
        ("6 mpc optimality", mpc()),
        ("7 tracking quality", tracking()),
        ("8 kinematics", kinematics()),
        ("9 aems", aems(&corpus)),
        ("10 rules", rules(&corpus)),
        ("11 determinism", determinism(&corpus)),
        ("12 sweep trends", sweeps()),
    ];
    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(msg) => println!("PASS  criterion {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  criterion {name}: {msg}");
            }
        }
    }
    println!("acceptance: {}/{} passed in {:.0} s", results.len() - failed, results.len(), t0.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
