//! Receding-horizon path tracker over the kinematic bicycle.
//!
//! Each call linearizes the prediction around the current input sequence,
//! solves the box-constrained quadratic subproblem by projected coordinate
//! descent, and accepts the step only if the nonlinear cost drops.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::track::geometry::{project_on_segment, wrap_angle, Point};
use crate::track::{Raceline, Waypoint};
use crate::vehicle::{clamp_command, Command, VehicleParams, VehicleState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    pub horizon_steps: usize,
    pub dt: f64,
    /// Stage weights on (x, y, φ, v) errors.
    pub q: [f64; 4],
    /// Terminal weights on (x, y, φ, v) errors.
    pub q_f: [f64; 4],
    /// Weights on (a, δ).
    pub r: [f64; 2],
    /// Weights on consecutive input changes.
    pub r_d: [f64; 2],
    pub max_iterations: usize,
    /// Sweep cap for the coordinate-descent subproblem.
    pub qp_sweeps: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            horizon_steps: 10,
            dt: 0.1,
            q: [1.0, 1.0, 2.0, 0.5],
            q_f: [2.0, 2.0, 4.0, 0.5],
            r: [0.01, 0.1],
            r_d: [0.01, 10.0],
            max_iterations: 6,
            qp_sweeps: 200,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon_steps < 2 {
            return Err(Error::Config("tracker.horizon_steps must be at least 2".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config("tracker.dt must be positive".into()));
        }
        let weights = self.q.iter().chain(&self.q_f).chain(&self.r).chain(&self.r_d);
        if weights.clone().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::Config("tracker weights must be finite and non-negative".into()));
        }
        if self.max_iterations == 0 || self.qp_sweeps == 0 {
            return Err(Error::Config("tracker iteration caps must be positive".into()));
        }
        Ok(())
    }
}

/// Reference states `z_0..z_T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceWindow {
    pub states: Vec<VehicleState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpcSolution {
    pub commands: Vec<Command>,
    pub predicted: Vec<VehicleState>,
    pub cost: f64,
    /// Cost after each accepted iterate, starting with the initial guess.
    pub cost_history: Vec<f64>,
}

/// Polyline with speeds, either a closed loop or an open plan.
#[derive(Debug, Clone)]
pub struct RefPath {
    points: Vec<Point>,
    speeds: Vec<f64>,
    cum_s: Vec<f64>,
    length: f64,
    closed: bool,
}

impl RefPath {
    fn build(wps: &[Waypoint], closed: bool) -> Result<Self> {
        let mut points: Vec<Point> = Vec::with_capacity(wps.len());
        let mut speeds = Vec::with_capacity(wps.len());
        for w in wps {
            if !(w.pos().is_finite() && w.v.is_finite()) {
                return Err(Error::Tracker("reference contains non-finite values".into()));
            }
            if points.last().map_or(true, |p| p.dist(w.pos()) > 1e-9) {
                points.push(w.pos());
                speeds.push(w.v.max(0.0));
            }
        }
        if points.is_empty() {
            return Err(Error::Tracker("empty reference trajectory".into()));
        }
        let closed = closed && points.len() >= 3;
        let n_seg = if closed { points.len() } else { points.len() - 1 };
        let mut cum_s = Vec::with_capacity(points.len() + 1);
        let mut s = 0.0;
        cum_s.push(0.0);
        for i in 0..n_seg {
            s += points[i].dist(points[(i + 1) % points.len()]);
            cum_s.push(s);
        }
        Ok(Self { points, speeds, cum_s, length: s, closed })
    }

    pub fn open(wps: &[Waypoint]) -> Result<Self> {
        Self::build(wps, false)
    }

    pub fn closed(wps: &[Waypoint]) -> Result<Self> {
        Self::build(wps, true)
    }

    pub fn from_raceline(rl: &Raceline) -> Self {
        Self::build(rl.waypoints(), true).expect("raceline is validated on construction")
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    fn n_seg(&self) -> usize {
        self.cum_s.len() - 1
    }

    fn seg(&self, i: usize) -> (Point, Point) {
        (self.points[i], self.points[(i + 1) % self.points.len()])
    }

    fn norm_s(&self, s: f64) -> f64 {
        if self.closed {
            s.rem_euclid(self.length)
        } else {
            s.clamp(0.0, self.length)
        }
    }

    fn seg_index(&self, s: f64) -> usize {
        let s = self.norm_s(s);
        match self.cum_s.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => i.min(self.n_seg().saturating_sub(1)),
            Err(i) => (i - 1).min(self.n_seg().saturating_sub(1)),
        }
    }

    /// Position, heading and speed at arc `s` (wrapped on loops, clamped on
    /// open paths).
    pub fn sample(&self, s: f64) -> (Point, f64, f64) {
        if self.n_seg() == 0 {
            return (self.points[0], 0.0, self.speeds[0]);
        }
        let s = self.norm_s(s);
        let i = self.seg_index(s);
        let (a, b) = self.seg(i);
        let len = self.cum_s[i + 1] - self.cum_s[i];
        let t = ((s - self.cum_s[i]) / len).clamp(0.0, 1.0);
        let j = (i + 1) % self.points.len();
        let d = b - a;
        (a + d * t, d.y.atan2(d.x), self.speeds[i] * (1.0 - t) + self.speeds[j] * t)
    }

    /// Closest point as `(arc_s, lateral offset left-positive)`. With a hint
    /// the search is limited to nearby segments, widening to the whole path
    /// when the optimum sits on the window edge.
    pub fn project(&self, q: Point, hint_s: Option<f64>) -> (f64, f64) {
        let n = self.n_seg();
        if n == 0 {
            return (0.0, 0.0);
        }
        let all = || (0..n).collect::<Vec<_>>();
        let candidates = match hint_s {
            Some(h) if n > 120 => {
                let c = self.seg_index(h) as isize;
                (-50isize..=50)
                    .filter_map(|k| {
                        let i = c + k;
                        if self.closed {
                            Some(i.rem_euclid(n as isize) as usize)
                        } else {
                            (0..n as isize).contains(&i).then_some(i as usize)
                        }
                    })
                    .collect()
            }
            _ => all(),
        };
        let scan = |idx: &[usize]| {
            let mut best = (f64::INFINITY, 0usize, Point::default(), 0usize);
            for (k, &i) in idx.iter().enumerate() {
                let (a, b) = self.seg(i);
                let (p, _) = project_on_segment(a, b, q);
                let d = p.dist(q);
                if d < best.0 {
                    best = (d, i, p, k);
                }
            }
            best
        };
        let mut best = scan(&candidates);
        if candidates.len() < n && (best.3 == 0 || best.3 == candidates.len() - 1) {
            best = scan(&all());
        }
        let (d, i, p, _) = best;
        let (a, b) = self.seg(i);
        let side = (b - a).cross(q - p).signum();
        (self.cum_s[i] + p.dist(a), side * d)
    }
}

/// Windows the path ahead of the car: the first state is the car's
/// projection, later states advance by the local reference speed times `dt`.
pub fn extract_reference(path: &RefPath, state: &VehicleState, hint_s: Option<f64>, config: &TrackerConfig) -> Result<(ReferenceWindow, f64)> {
    if !(state.pos().is_finite() && state.v.is_finite() && state.phi.is_finite()) {
        return Err(Error::Tracker("vehicle state is not finite".into()));
    }
    let (s0, _) = path.project(state.pos(), hint_s);
    let mut s = s0;
    let mut states = Vec::with_capacity(config.horizon_steps + 1);
    for _ in 0..=config.horizon_steps {
        let (p, h, v) = path.sample(s);
        states.push(VehicleState { x: p.x, y: p.y, phi: h, v });
        s += v * config.dt;
    }
    Ok((ReferenceWindow { states }, s0))
}

fn predict(z: &VehicleState, u: &Command, dt: f64, wb: f64) -> VehicleState {
    let (sin, cos) = z.phi.sin_cos();
    VehicleState {
        x: z.x + z.v * cos * dt,
        y: z.y + z.v * sin * dt,
        phi: z.phi + z.v * u.delta.tan() / wb * dt,
        v: z.v + u.a * dt,
    }
}

fn rollout(z0: &VehicleState, us: &[Command], dt: f64, wb: f64) -> Vec<VehicleState> {
    let mut zs = Vec::with_capacity(us.len() + 1);
    zs.push(*z0);
    for u in us {
        let next = predict(zs.last().unwrap(), u, dt, wb);
        zs.push(next);
    }
    zs
}

fn state_error(z: &VehicleState, r: &VehicleState) -> [f64; 4] {
    [z.x - r.x, z.y - r.y, wrap_angle(z.phi - r.phi), z.v - r.v]
}

/// Maneuver cost of a predicted trajectory.
pub fn trajectory_cost(zs: &[VehicleState], us: &[Command], reference: &ReferenceWindow, config: &TrackerConfig) -> f64 {
    let t = us.len();
    let mut c = 0.0;
    for k in 1..=t {
        let e = state_error(&zs[k], &reference.states[k]);
        let w = if k == t { &config.q_f } else { &config.q };
        c += (0..4).map(|i| w[i] * e[i] * e[i]).sum::<f64>();
    }
    for (k, u) in us.iter().enumerate() {
        c += config.r[0] * u.a * u.a + config.r[1] * u.delta * u.delta;
        if let Some(n) = us.get(k + 1) {
            c += config.r_d[0] * (n.a - u.a).powi(2) + config.r_d[1] * (n.delta - u.delta).powi(2);
        }
    }
    c
}

/// Jacobians of one prediction step with respect to state and input.
fn step_jacobians(z: &VehicleState, u: &Command, dt: f64, wb: f64) -> ([[f64; 4]; 4], [[f64; 2]; 4]) {
    let (sin, cos) = z.phi.sin_cos();
    let tan = u.delta.tan();
    let a = [
        [1.0, 0.0, -z.v * sin * dt, cos * dt],
        [0.0, 1.0, z.v * cos * dt, sin * dt],
        [0.0, 0.0, 1.0, tan / wb * dt],
        [0.0, 0.0, 0.0, 1.0],
    ];
    let sec2 = 1.0 + tan * tan;
    let b = [[0.0, 0.0], [0.0, 0.0], [0.0, z.v * sec2 / wb * dt], [dt, 0.0]];
    (a, b)
}

fn to_vec(us: &[Command]) -> Vec<f64> {
    us.iter().flat_map(|u| [u.a, u.delta]).collect()
}

fn from_vec(v: &[f64]) -> Vec<Command> {
    v.chunks(2).map(|c| Command { a: c[0], delta: c[1] }).collect()
}

/// Builds `½ΔᵀHΔ + bᵀΔ` for the linearized cost around `us`.
fn quadratic_model(zs: &[VehicleState], us: &[Command], reference: &ReferenceWindow, config: &TrackerConfig, wb: f64) -> (Vec<f64>, Vec<f64>) {
    let t = us.len();
    let n = 2 * t;
    let dt = config.dt;
    let jac: Vec<_> = (0..t).map(|k| step_jacobians(&zs[k], &us[k], dt, wb)).collect();
    // sens[k] = ∂z_{step}/∂u_k, propagated forward one step at a time.
    let mut sens: Vec<[[f64; 2]; 4]> = vec![[[0.0; 2]; 4]; t];
    let mut h = vec![0.0; n * n];
    let mut b = vec![0.0; n];
    for step in 1..=t {
        let (a, bm) = &jac[step - 1];
        for s in sens.iter_mut().take(step - 1) {
            let mut next = [[0.0; 2]; 4];
            for r in 0..4 {
                for c in 0..2 {
                    next[r][c] = (0..4).map(|m| a[r][m] * s[m][c]).sum();
                }
            }
            *s = next;
        }
        sens[step - 1] = *bm;
        let e = state_error(&zs[step], &reference.states[step]);
        let w = if step == t { &config.q_f } else { &config.q };
        // Row i of J for this step, over all inputs up to step-1.
        for i in 0..4 {
            if w[i] == 0.0 {
                continue;
            }
            let row: Vec<(usize, f64)> = (0..step).flat_map(|k| [(2 * k, sens[k][i][0]), (2 * k + 1, sens[k][i][1])]).collect();
            for &(p, jp) in &row {
                b[p] += 2.0 * w[i] * jp * e[i];
                for &(q, jq) in &row {
                    h[p * n + q] += 2.0 * w[i] * jp * jq;
                }
            }
        }
    }
    let u = to_vec(us);
    for k in 0..t {
        for c in 0..2 {
            let p = 2 * k + c;
            h[p * n + p] += 2.0 * config.r[c];
            b[p] += 2.0 * config.r[c] * u[p];
            if k + 1 < t {
                let q = p + 2;
                let w = config.r_d[c];
                let du = u[q] - u[p];
                h[p * n + p] += 2.0 * w;
                h[q * n + q] += 2.0 * w;
                h[p * n + q] -= 2.0 * w;
                h[q * n + p] -= 2.0 * w;
                b[p] -= 2.0 * w * du;
                b[q] += 2.0 * w * du;
            }
        }
    }
    (h, b)
}

/// Projected coordinate descent on `½ΔᵀHΔ + bᵀΔ` with `lo ≤ Δ ≤ hi`.
fn box_qp(h: &[f64], b: &[f64], lo: &[f64], hi: &[f64], sweeps: usize) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut g = b.to_vec();
    for _ in 0..sweeps {
        let mut moved = 0.0f64;
        for i in 0..n {
            let hii = h[i * n + i];
            if hii <= 0.0 {
                continue;
            }
            let xi = (x[i] - g[i] / hii).clamp(lo[i], hi[i]);
            let d = xi - x[i];
            if d != 0.0 {
                x[i] = xi;
                for j in 0..n {
                    g[j] += h[j * n + i] * d;
                }
                moved = moved.max(d.abs());
            }
        }
        if moved < 1e-10 {
            break;
        }
    }
    x
}

/// Minimizes the maneuver cost from the better of `warm` and the zero-input
/// sequence. Returned commands respect the actuator limits and the cost
/// never exceeds the zero-input cost.
pub fn solve(state: &VehicleState, reference: &ReferenceWindow, config: &TrackerConfig, params: &VehicleParams, warm: Option<&[Command]>) -> Result<MpcSolution> {
    let t = config.horizon_steps;
    if reference.states.len() != t + 1 {
        return Err(Error::Tracker(format!("reference has {} states, expected {}", reference.states.len(), t + 1)));
    }
    let finite = |z: &VehicleState| z.x.is_finite() && z.y.is_finite() && z.phi.is_finite() && z.v.is_finite();
    if !finite(state) || !reference.states.iter().all(finite) {
        return Err(Error::Tracker("non-finite tracker input".into()));
    }
    let wb = params.wheelbase;
    let dt = config.dt;
    let eval = |us: &[Command]| {
        let zs = rollout(state, us, dt, wb);
        let c = trajectory_cost(&zs, us, reference, config);
        (zs, c)
    };
    let mut us = vec![Command::default(); t];
    let (mut zs, mut cost) = eval(&us);
    if let Some(w) = warm.filter(|w| w.len() == t) {
        let wu: Vec<Command> = w.iter().map(|c| clamp_command(*c, params)).collect();
        let (wz, wc) = eval(&wu);
        if wc < cost {
            us = wu;
            zs = wz;
            cost = wc;
        }
    }
    let lo_u: Vec<f64> = (0..t).flat_map(|_| [params.a_min, params.delta_min]).collect();
    let hi_u: Vec<f64> = (0..t).flat_map(|_| [params.a_max, params.delta_max]).collect();
    let mut history = vec![cost];
    for _ in 0..config.max_iterations {
        let (h, b) = quadratic_model(&zs, &us, reference, config, wb);
        let u = to_vec(&us);
        let lo: Vec<f64> = (0..2 * t).map(|i| lo_u[i] - u[i]).collect();
        let hi: Vec<f64> = (0..2 * t).map(|i| hi_u[i] - u[i]).collect();
        let delta = box_qp(&h, &b, &lo, &hi, config.qp_sweeps);
        let mut accepted = false;
        let mut alpha = 1.0;
        for _ in 0..8 {
            let cand: Vec<f64> = (0..2 * t).map(|i| (u[i] + alpha * delta[i]).clamp(lo_u[i], hi_u[i])).collect();
            let cu = from_vec(&cand);
            let (cz, cc) = eval(&cu);
            if cc < cost {
                us = cu;
                zs = cz;
                let gain = cost - cc;
                cost = cc;
                history.push(cost);
                accepted = gain > 1e-12 * cost.max(1.0);
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(MpcSolution { commands: us, predicted: zs, cost, cost_history: history })
}

/// First command of a solution, clamped to the actuator limits.
pub fn first_command(sol: &MpcSolution, params: &VehicleParams) -> Command {
    assert!(!sol.commands.is_empty(), "solution has no commands");
    clamp_command(sol.commands[0], params)
}

/// Stateful wrapper that keeps the previous solution for warm starts and the
/// last projection for local searches.
#[derive(Debug, Clone)]
pub struct Tracker {
    pub config: TrackerConfig,
    previous: Option<Vec<Command>>,
    hint_s: Option<f64>,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, previous: None, hint_s: None })
    }

    /// Drops the warm start and search hint, e.g. after switching paths.
    pub fn reset(&mut self) {
        self.previous = None;
        self.hint_s = None;
    }

    /// Tracks `path` from `state` and returns the command to apply now with
    /// the solution it came from.
    pub fn control(&mut self, path: &RefPath, state: &VehicleState, params: &VehicleParams) -> Result<(Command, MpcSolution)> {
        let (window, s0) = extract_reference(path, state, self.hint_s, &self.config)?;
        self.hint_s = Some(s0);
        let warm = self.previous.as_ref().map(|p| {
            let mut w = p[1..].to_vec();
            w.push(*p.last().unwrap());
            w
        });
        let sol = solve(state, &window, &self.config, params, warm.as_deref())?;
        self.previous = Some(sol.commands.clone());
        Ok((first_command(&sol, params), sol))
    }
}
