//! One network tick: supervisor, overtake, defense, output word, mux.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::guards::{ar4_base, ar6_base, argos_guards, autopass_guards, kaval_guards, pick, ArgosContext, Guard};
use super::{
    ArgosState, AutoPassState, AutomatonStates, DefenseOutcome, FscTag, GuardConfig, InputFrame, KavalState, OhvWord,
    PassOutcome, Plan, Role, SignalBus, TriggerSet,
};
use crate::error::{Error, Result};
use crate::planner::{PlanSource, PlannerOutput};

/// Plans requested by the automatons. Implementations see the world as of
/// the current tick.
pub trait ManeuverPlanner {
    /// A feasible overtake, or `None` when no plan clears the checks.
    fn overtake(&mut self) -> Option<PlannerOutput>;
    /// A feasible block, or `None`.
    fn defense(&mut self) -> Option<PlannerOutput>;
    /// Speed-reduced return to the raceline behind the opponent.
    fn merge_behind(&mut self, source: PlanSource) -> PlannerOutput;
}

/// Reference selected for one tracker channel.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    /// The global raceline (or its speed profile).
    Global,
    Plan(Plan),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFrame {
    pub op0: OhvWord,
    /// Velocity-profile reference.
    pub op1: Reference,
    /// Trajectory reference.
    pub op2: Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub automaton: String,
    pub from: String,
    pub to: String,
    pub guard: Guard,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickOutput {
    pub transitions: Vec<Transition>,
    /// `None` for a combination outside the valid table.
    pub fsc: Option<FscTag>,
    /// The supervisor cut a maneuver short this tick.
    pub truncated: bool,
    pub output: OutputFrame,
}

/// Maps a state triple to its tag. Exit states report the state they are
/// leaving.
pub fn fsc_of(s: &AutomatonStates) -> Option<FscTag> {
    use ArgosState as A;
    use AutoPassState as P;
    use KavalState as K;
    Some(match (s.argos, s.autopass, s.kaval) {
        (A::Standby, P::Disarm, K::Disarm) => FscTag::Fsc00,
        (A::Race, P::Disarm, K::Disarm) => FscTag::Fsc10,
        (A::Wait, P::Init, K::Disarm) => FscTag::Fsc20,
        (A::Wait, P::Disarm, K::Init) => FscTag::Fsc21,
        (A::Overtake, P::Pass | P::Exit(PassOutcome::Passed), K::Disarm) => FscTag::Fsc30,
        (A::Overtake, P::Abandon | P::Exit(PassOutcome::Abandoned), K::Disarm) => FscTag::Fsc31,
        (A::Defend, P::Disarm, K::Block | K::Exit(DefenseOutcome::Held)) => FscTag::Fsc40,
        (A::Defend, P::Disarm, K::Fallback | K::Exit(DefenseOutcome::FellBack)) => FscTag::Fsc41,
        _ => return None,
    })
}

/// Override word: 1 overtake path, 2 overtake speed, 4 defense path,
/// 8 defense speed.
pub fn set_op0(bus: &SignalBus) -> Result<OhvWord> {
    let ap = u8::from(bus.sg04.is_some()) | u8::from(bus.sg03.is_some()) << 1;
    let ka = u8::from(bus.sg14.is_some()) << 2 | u8::from(bus.sg13.is_some()) << 3;
    if ap != 0 && ka != 0 {
        return Err(Error::Invariant(format!("override requests overlap: {}", ap | ka)));
    }
    Ok(OhvWord(ap | ka))
}

pub fn mux_outputs(op0: OhvWord, bus: &SignalBus) -> Result<OutputFrame> {
    let take = |p: &Option<Plan>, name: &str| {
        p.clone().map(Reference::Plan).ok_or_else(|| Error::Invariant(format!("{op0} selects empty {name}")))
    };
    let op1 = match op0.0 {
        0 | 1 | 4 => Reference::Global,
        2 | 3 => take(&bus.sg03, "sg03")?,
        8 | 12 => take(&bus.sg13, "sg13")?,
        _ => return Err(Error::Invariant(format!("illegal override word {op0}"))),
    };
    let op2 = match op0.0 {
        0 | 2 | 8 => Reference::Global,
        1 | 3 => take(&bus.sg04, "sg04")?,
        _ => take(&bus.sg14, "sg14")?,
    };
    Ok(OutputFrame { op0, op1, op2 })
}

/// One car's automaton network.
#[derive(Debug, Clone)]
pub struct Network {
    pub states: AutomatonStates,
    pub bus: SignalBus,
    pub triggers: TriggerSet,
    pub config: GuardConfig,
    armed: Option<Role>,
    reset_pending: bool,
}

fn record<S: std::fmt::Display>(out: &mut Vec<Transition>, automaton: &str, from: S, to: S, guard: Guard) {
    out.push(Transition { automaton: automaton.into(), from: from.to_string(), to: to.to_string(), guard });
}

impl Network {
    pub fn new(triggers: TriggerSet, config: GuardConfig) -> Result<Self> {
        triggers.validate()?;
        Ok(Self { states: AutomatonStates::default(), bus: SignalBus::default(), triggers, config, armed: None, reset_pending: false })
    }

    pub fn armed(&self) -> Option<Role> {
        self.armed
    }

    fn clear_supervisor(&mut self) {
        let b = &mut self.bus;
        b.sg00 = false;
        b.sg01 = false;
        b.sg10 = false;
        b.sg11 = false;
        b.staged_overtake = None;
        b.staged_defense = None;
        self.armed = None;
        self.reset_pending = false;
    }

    fn argos(&mut self, inp: &InputFrame, planner: &mut dyn ManeuverPlanner, log: &mut Vec<Transition>) -> Result<bool> {
        let state = self.states.argos;
        let mut ctx = ArgosContext {
            inputs: inp,
            bus: &self.bus,
            triggers: &self.triggers,
            config: &self.config,
            armed: self.armed,
            reset_pending: self.reset_pending,
            overtake_ready: false,
            defense_ready: false,
        };
        let mut overtake = None;
        let mut defense = None;
        if state == ArgosState::Wait {
            if ar4_base(&ctx) {
                overtake = planner.overtake();
                ctx.overtake_ready = overtake.is_some();
            } else if ar6_base(&ctx) {
                defense = planner.defense();
                ctx.defense_ready = defense.is_some();
            }
        }
        let Some((guard, to)) = pick("argos", state, argos_guards(state, &ctx))? else {
            return Ok(false);
        };
        let mut truncated = false;
        match guard {
            Guard::Ar1 | Guard::Ar3 => self.clear_supervisor(),
            Guard::ArTrunc => {
                self.clear_supervisor();
                truncated = true;
            }
            Guard::Ar2 => {
                let role = if inp.ip3 { Role::Defender } else { Role::Attacker };
                match role {
                    Role::Attacker => self.bus.sg00 = true,
                    Role::Defender => self.bus.sg10 = true,
                }
                self.armed = Some(role);
            }
            Guard::Ar4 => {
                self.bus.staged_overtake = overtake.map(Arc::new);
                self.bus.sg01 = true;
            }
            Guard::Ar6 => {
                self.bus.staged_defense = defense.map(Arc::new);
                self.bus.sg11 = true;
            }
            Guard::Ar5 => {
                self.bus.sg01 = false;
                self.reset_pending = true;
            }
            Guard::Ar7 => {
                self.bus.sg11 = false;
                self.reset_pending = true;
            }
            _ => {}
        }
        record(log, "argos", state, to, guard);
        self.states.argos = to;
        Ok(truncated)
    }

    fn enter_autopass(&mut self, to: AutoPassState, planner: &mut dyn ManeuverPlanner) {
        let b = &mut self.bus;
        match to {
            AutoPassState::Disarm | AutoPassState::Init => {
                b.sg02 = false;
                b.sg03 = None;
                b.sg04 = None;
            }
            AutoPassState::Pass => {
                let plan = b.staged_overtake.take();
                b.sg03 = plan.clone();
                b.sg04 = plan;
            }
            AutoPassState::Abandon => {
                let plan = Arc::new(planner.merge_behind(PlanSource::Overtake));
                b.sg03 = Some(plan.clone());
                b.sg04 = Some(plan);
            }
            AutoPassState::Exit(_) => {
                b.sg02 = true;
                b.sg03 = None;
                b.sg04 = None;
            }
        }
    }

    fn enter_kaval(&mut self, to: KavalState, planner: &mut dyn ManeuverPlanner) {
        let b = &mut self.bus;
        match to {
            KavalState::Disarm | KavalState::Init => {
                b.sg12 = false;
                b.sg13 = None;
                b.sg14 = None;
            }
            KavalState::Block => {
                let plan = b.staged_defense.take();
                b.sg13 = plan.clone();
                b.sg14 = plan;
            }
            KavalState::Fallback => {
                let plan = Arc::new(planner.merge_behind(PlanSource::Defense));
                b.sg13 = Some(plan.clone());
                b.sg14 = Some(plan);
            }
            KavalState::Exit(_) => {
                b.sg12 = true;
                b.sg13 = None;
                b.sg14 = None;
            }
        }
    }

    fn autopass(&mut self, inp: &InputFrame, planner: &mut dyn ManeuverPlanner, log: &mut Vec<Transition>) -> Result<()> {
        // An exit hands straight back to disarm, which may re-arm at once.
        for _ in 0..2 {
            let state = self.states.autopass;
            let enabled = autopass_guards(state, inp, &self.bus, &self.triggers, &self.config);
            let Some((guard, to)) = pick("autopass", state, enabled)? else { break };
            self.enter_autopass(to, planner);
            record(log, "autopass", state, to, guard);
            self.states.autopass = to;
            if guard != Guard::ApExit {
                break;
            }
        }
        Ok(())
    }

    fn kaval(&mut self, inp: &InputFrame, planner: &mut dyn ManeuverPlanner, log: &mut Vec<Transition>) -> Result<()> {
        for _ in 0..2 {
            let state = self.states.kaval;
            let enabled = kaval_guards(state, inp, &self.bus, &self.triggers, &self.config);
            let Some((guard, to)) = pick("kaval", state, enabled)? else { break };
            self.enter_kaval(to, planner);
            record(log, "kaval", state, to, guard);
            self.states.kaval = to;
            if guard != Guard::KaExit {
                break;
            }
        }
        Ok(())
    }

    /// Runs one tick in the fixed order supervisor, overtake, defense,
    /// output word, mux.
    pub fn tick(&mut self, inputs: &InputFrame, planner: &mut dyn ManeuverPlanner) -> Result<TickOutput> {
        inputs.validate()?;
        let mut transitions = Vec::new();
        let truncated = self.argos(inputs, planner, &mut transitions)?;
        self.autopass(inputs, planner, &mut transitions)?;
        self.kaval(inputs, planner, &mut transitions)?;
        self.bus.check()?;
        let op0 = set_op0(&self.bus)?;
        let output = mux_outputs(op0, &self.bus)?;
        Ok(TickOutput { transitions, fsc: fsc_of(&self.states), truncated, output })
    }
}
