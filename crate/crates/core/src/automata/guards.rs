//! Guard predicates. Each function lists every enabled out-transition of the
//! current state; the network insists on at most one.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{
    ArgosState, AutoPassState, BitMode, DefenseOutcome, FallbackWindow, GuardConfig, InputFrame, KavalState, OhvWord,
    PassOutcome, Role, SignalBus, TrajectoryTag, TriggerSet,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Guard {
    Ar0,
    Ar1,
    Ar2,
    Ar3,
    Ar4,
    Ar5,
    Ar6,
    Ar7,
    /// Left the passing zone or lost the opponent mid-maneuver.
    ArTrunc,
    Ap0,
    Ap1,
    Ap2,
    Ap4,
    Ap5,
    /// Pass completed with the required lead.
    ApDone,
    ApExit,
    Ka0,
    Ka1,
    Ka2,
    Ka3,
    Ka4,
    Ka5,
    KaExit,
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        f.write_str(s.as_ref().and_then(|v| v.as_str()).unwrap_or("?"))
    }
}

/// Everything the supervisor's guards read.
#[derive(Debug, Clone, Copy)]
pub struct ArgosContext<'a> {
    pub inputs: &'a InputFrame,
    pub bus: &'a SignalBus,
    pub triggers: &'a TriggerSet,
    pub config: &'a GuardConfig,
    /// Role recorded when the current wait was armed.
    pub armed: Option<Role>,
    /// Set when a maneuver just finished, so the wait ends after one tick.
    pub reset_pending: bool,
    /// The planner returned a feasible overtake for this tick.
    pub overtake_ready: bool,
    /// The planner returned a feasible defense for this tick.
    pub defense_ready: bool,
}

fn in_range(inp: &InputFrame, trig: &TriggerSet) -> bool {
    inp.ip2.abs() <= trig.trig0
}

fn role_of(inp: &InputFrame) -> Role {
    if inp.ip3 {
        Role::Defender
    } else {
        Role::Attacker
    }
}

/// Start condition on budget and opponent word.
pub fn ap3(inp: &InputFrame, trig: &TriggerSet, cfg: &GuardConfig) -> bool {
    let word = match cfg.bit_mode {
        BitMode::Remapped => !inp.ip5.has(OhvWord::BLOCKING.0),
        BitMode::Literal => inp.ip5.has(OhvWord::ABANDONED.0),
    };
    inp.ip4 > trig.trig6 && word
}

/// The wait must end: window left, opponent lost, role changed, or a
/// maneuver just finished.
fn wait_over(ctx: &ArgosContext) -> bool {
    let inp = ctx.inputs;
    !ctx.triggers.in_follow_window(inp.role_gap()) || !in_range(inp, ctx.triggers) || ctx.armed != Some(role_of(inp)) || ctx.reset_pending
}

/// Every conjunct of `ar4` except plan feasibility.
pub fn ar4_base(ctx: &ArgosContext) -> bool {
    let inp = ctx.inputs;
    !inp.is_black()
        && !wait_over(ctx)
        && ctx.armed == Some(Role::Attacker)
        && !inp.ip3
        && inp.is_blue()
        && ap3(inp, ctx.triggers, ctx.config)
        && inp.role_gap() >= ctx.triggers.trig3
}

/// Every conjunct of `ar6` except plan feasibility.
pub fn ar6_base(ctx: &ArgosContext) -> bool {
    let inp = ctx.inputs;
    !inp.is_black()
        && !wait_over(ctx)
        && ctx.armed == Some(Role::Defender)
        && inp.ip3
        && inp.is_blue()
        && inp.ip5.has(OhvWord::ATTEMPTING.0)
        && inp.role_gap() >= ctx.triggers.trig3
}

pub fn argos_guards(state: ArgosState, ctx: &ArgosContext) -> Vec<(Guard, ArgosState)> {
    use ArgosState::*;
    let inp = ctx.inputs;
    let black = inp.is_black();
    let mut out = Vec::new();
    let mut add = |cond: bool, g: Guard, to: ArgosState| {
        if cond {
            out.push((g, to));
        }
    };
    if state != Standby {
        add(black, Guard::Ar1, Standby);
    }
    let lost = !inp.is_blue() || !in_range(inp, ctx.triggers);
    match state {
        Standby => add(!black && inp.ip1 == TrajectoryTag::Raceline, Guard::Ar0, Race),
        Race => add(!black && in_range(inp, ctx.triggers) && ctx.triggers.in_follow_window(inp.role_gap()), Guard::Ar2, Wait),
        Wait => {
            add(!black && wait_over(ctx), Guard::Ar3, Race);
            add(ar4_base(ctx) && ctx.overtake_ready, Guard::Ar4, Overtake);
            add(ar6_base(ctx) && ctx.defense_ready, Guard::Ar6, Defend);
        }
        Overtake => {
            add(!black && ctx.bus.sg02, Guard::Ar5, Wait);
            add(!black && !ctx.bus.sg02 && lost, Guard::ArTrunc, Race);
        }
        Defend => {
            add(!black && ctx.bus.sg12, Guard::Ar7, Wait);
            add(!black && !ctx.bus.sg12 && lost, Guard::ArTrunc, Race);
        }
    }
    out
}

pub fn autopass_guards(state: AutoPassState, inp: &InputFrame, bus: &SignalBus, trig: &TriggerSet, cfg: &GuardConfig) -> Vec<(Guard, AutoPassState)> {
    use AutoPassState::*;
    let mut out = Vec::new();
    let mut add = |cond: bool, g: Guard, to: AutoPassState| {
        if cond {
            out.push((g, to));
        }
    };
    let armed = bus.sg00;
    let done = inp.ip2 <= -trig.trig4;
    let blocked = match cfg.bit_mode {
        BitMode::Remapped => inp.ip5.has(OhvWord::BLOCKING.0),
        BitMode::Literal => !inp.ip5.has(OhvWord::ABANDONED.0),
    };
    match state {
        Disarm => add(armed, Guard::Ap0, Init),
        Init => {
            add(!armed, Guard::Ap1, Disarm);
            add(armed && bus.sg01 && bus.staged_overtake.is_some() && ap3(inp, trig, cfg), Guard::Ap2, Pass);
        }
        Pass => {
            add(!armed, Guard::Ap1, Disarm);
            add(armed && done, Guard::ApDone, Exit(PassOutcome::Passed));
            add(armed && !done && (inp.ip4 < trig.trig7 || blocked || inp.forced.abandon), Guard::Ap4, Abandon);
        }
        Abandon => {
            add(!armed, Guard::Ap1, Disarm);
            add(armed && trig.in_follow_window(inp.ip2), Guard::Ap5, Exit(PassOutcome::Abandoned));
        }
        Exit(_) => add(true, Guard::ApExit, Disarm),
    }
    out
}

pub fn kaval_guards(state: KavalState, inp: &InputFrame, bus: &SignalBus, trig: &TriggerSet, cfg: &GuardConfig) -> Vec<(Guard, KavalState)> {
    use KavalState::*;
    let mut out = Vec::new();
    let mut add = |cond: bool, g: Guard, to: KavalState| {
        if cond {
            out.push((g, to));
        }
    };
    let armed = bus.sg10;
    let held = match cfg.bit_mode {
        BitMode::Remapped => inp.ip5.has(OhvWord::ABANDONED.0),
        BitMode::Literal => inp.ip5.has(OhvWord::FALLBACK.0),
    };
    let recovered = match cfg.fallback_window {
        FallbackWindow::Recovered => inp.ip2 >= trig.trig1 && inp.ip2 <= trig.trig0,
        FallbackWindow::Literal => inp.ip2 >= trig.trig0 && inp.ip2 <= trig.trig1,
    };
    match state {
        Disarm => add(armed, Guard::Ka0, Init),
        Init => {
            add(!armed, Guard::Ka1, Disarm);
            add(armed && bus.sg11 && bus.staged_defense.is_some(), Guard::Ka2, Block);
        }
        Block => {
            add(!armed, Guard::Ka1, Disarm);
            add(armed && held, Guard::Ka3, Exit(DefenseOutcome::Held));
            add(armed && !held && (inp.ip2 >= trig.trig4 || inp.forced.fallback), Guard::Ka4, Fallback);
        }
        Fallback => {
            add(!armed, Guard::Ka1, Disarm);
            add(armed && recovered, Guard::Ka5, Exit(DefenseOutcome::FellBack));
        }
        Exit(_) => add(true, Guard::KaExit, Disarm),
    }
    out
}

/// The single enabled transition, if any.
pub fn pick<S: Copy + fmt::Debug>(automaton: &str, state: S, enabled: Vec<(Guard, S)>) -> Result<Option<(Guard, S)>> {
    match enabled.len() {
        0 => Ok(None),
        1 => Ok(Some(enabled[0])),
        _ => Err(Error::Invariant(format!("{automaton} in {state:?} has overlapping guards {enabled:?}"))),
    }
}
