//! The supervisor / overtake / defense automaton network.
//!
//! Per tick the network runs the supervisor, then the overtake automaton,
//! then the defense automaton, then the output-word and multiplexer stages.
//! Signals written in a tick are visible downstream in the same tick and
//! upstream in the next one.

pub mod guards;
pub mod network;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planner::PlannerOutput;

pub use guards::{argos_guards, autopass_guards, kaval_guards, ArgosContext, Guard};
pub use network::{fsc_of, mux_outputs, set_op0, ManeuverPlanner, Network, Reference, Transition};

/// Hard thresholds gating transitions. Distances in meters, budgets in
/// seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TriggerSet {
    /// Max opponent tracking distance.
    pub trig0: f64,
    /// Follow window, lower edge.
    pub trig1: f64,
    /// Follow window, upper edge.
    pub trig2: f64,
    /// Min gap to start a pass or block.
    pub trig3: f64,
    /// Lead that completes a maneuver.
    pub trig4: f64,
    /// Gap that recovers from a failed maneuver.
    pub trig5: f64,
    /// Min boost budget to start.
    pub trig6: f64,
    /// Min boost budget to continue.
    pub trig7: f64,
    /// Min lateral separation between cars.
    pub trig8: f64,
}

impl Default for TriggerSet {
    fn default() -> Self {
        Self { trig0: 150.0, trig1: 25.0, trig2: 30.0, trig3: 25.0, trig4: 20.0, trig5: 20.0, trig6: 6.0, trig7: 1.5, trig8: 7.5 }
    }
}

impl TriggerSet {
    pub fn validate(&self) -> Result<()> {
        let all = [self.trig0, self.trig1, self.trig2, self.trig3, self.trig4, self.trig5, self.trig6, self.trig7, self.trig8];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config("triggers must be finite and non-negative".into()));
        }
        if !(self.trig1 < self.trig2) {
            return Err(Error::Config("trig1 must be below trig2".into()));
        }
        if !(self.trig4 > 0.0 && self.trig5 > 0.0) {
            return Err(Error::Config("trig4 and trig5 must be positive".into()));
        }
        if !(self.trig7 < self.trig6) {
            return Err(Error::Config("trig7 must be below trig6".into()));
        }
        if !(self.trig0 > self.trig2) {
            return Err(Error::Config("trig0 must exceed trig2".into()));
        }
        Ok(())
    }

    /// `trig1 ≤ gap ≤ trig2`.
    pub fn in_follow_window(&self, gap: f64) -> bool {
        gap >= self.trig1 && gap <= self.trig2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagColor {
    Green,
    Blue,
    Black,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaceFlag {
    pub color: FlagColor,
    pub velocity_limit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryTag {
    Raceline,
    Override,
}

/// One-hot (or sparse) word. As opponent intent it carries at most one of
/// the `ATTEMPTING`..`FALLBACK` bits; as the override word it is one of
/// `{0, 1, 2, 3, 4, 8, 12}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OhvWord(pub u8);

impl OhvWord {
    pub const NONE: OhvWord = OhvWord(0);
    pub const ATTEMPTING: OhvWord = OhvWord(1);
    pub const ABANDONED: OhvWord = OhvWord(2);
    pub const BLOCKING: OhvWord = OhvWord(4);
    pub const FALLBACK: OhvWord = OhvWord(8);

    pub fn has(self, bit: u8) -> bool {
        self.0 & bit != 0
    }

    pub fn is_legal_intent(self) -> bool {
        matches!(self.0, 0 | 1 | 2 | 4 | 8)
    }

    pub fn is_legal_override(self) -> bool {
        matches!(self.0, 0 | 1 | 2 | 3 | 4 | 8 | 12)
    }
}

impl fmt::Display for OhvWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OHV<{}>", self.0)
    }
}

/// Events imposed by race control that end a maneuver early.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ForcedEvents {
    pub abandon: bool,
    pub fallback: bool,
}

/// Per-tick automaton inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputFrame {
    pub ip0: RaceFlag,
    pub ip1: TrajectoryTag,
    /// Signed raceline separation, positive when the opponent is ahead.
    pub ip2: f64,
    /// Ego leads the race.
    pub ip3: bool,
    /// Remaining boost budget, s.
    pub ip4: f64,
    /// Estimated opponent intent.
    pub ip5: OhvWord,
    pub forced: ForcedEvents,
}

impl InputFrame {
    pub fn validate(&self) -> Result<()> {
        if !(self.ip4 >= 0.0) {
            return Err(Error::Invariant(format!("boost budget {} is negative", self.ip4)));
        }
        if !self.ip5.is_legal_intent() {
            return Err(Error::Invariant(format!("opponent word {} has more than one bit", self.ip5)));
        }
        if !self.ip2.is_finite() {
            return Err(Error::Invariant("separation is not finite".into()));
        }
        Ok(())
    }

    pub fn is_blue(&self) -> bool {
        self.ip0.color == FlagColor::Blue
    }

    pub fn is_black(&self) -> bool {
        self.ip0.color == FlagColor::Black
    }

    /// Gap seen from the ego's role: distance to the car ahead when
    /// following, distance to the car behind when leading.
    pub fn role_gap(&self) -> f64 {
        if self.ip3 {
            -self.ip2
        } else {
            self.ip2
        }
    }
}

/// Which opponent-word bits the overtake and defense guards consult.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BitMode {
    /// Overtake guards watch for a block, defense guards for an abandon.
    #[default]
    Remapped,
    /// Overtake guards read bit 2, defense guards bit 8, as printed.
    Literal,
}

/// Separation interval that ends a fallback.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackWindow {
    /// `trig1 ≤ ip2 ≤ trig0`.
    #[default]
    Recovered,
    /// `trig0 ≤ ip2 ≤ trig1`, empty with the default triggers.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuardConfig {
    pub bit_mode: BitMode,
    pub fallback_window: FallbackWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArgosState {
    Standby,
    Race,
    Wait,
    Overtake,
    Defend,
}

/// How a finished overtake ended; kept on the transient exit state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PassOutcome {
    Passed,
    Abandoned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefenseOutcome {
    Held,
    FellBack,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoPassState {
    Disarm,
    Init,
    Pass,
    Abandon,
    Exit(PassOutcome),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KavalState {
    Disarm,
    Init,
    Block,
    Fallback,
    Exit(DefenseOutcome),
}

macro_rules! lower_display {
    ($t:ty, $($pat:pat => $s:expr),+ $(,)?) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($pat => $s),+ })
            }
        }
    };
}

lower_display!(ArgosState, ArgosState::Standby => "standby", ArgosState::Race => "race", ArgosState::Wait => "wait",
    ArgosState::Overtake => "overtake", ArgosState::Defend => "defend");
lower_display!(AutoPassState, AutoPassState::Disarm => "disarm", AutoPassState::Init => "init", AutoPassState::Pass => "pass",
    AutoPassState::Abandon => "abandon", AutoPassState::Exit(_) => "exit");
lower_display!(KavalState, KavalState::Disarm => "disarm", KavalState::Init => "init", KavalState::Block => "block",
    KavalState::Fallback => "fallback", KavalState::Exit(_) => "exit");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AutomatonStates {
    pub argos: ArgosState,
    pub autopass: AutoPassState,
    pub kaval: KavalState,
}

impl Default for AutomatonStates {
    fn default() -> Self {
        Self { argos: ArgosState::Standby, autopass: AutoPassState::Disarm, kaval: KavalState::Disarm }
    }
}

/// The eight valid state combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FscTag {
    #[serde(rename = "fsc00")]
    Fsc00,
    #[serde(rename = "fsc10")]
    Fsc10,
    #[serde(rename = "fsc20")]
    Fsc20,
    #[serde(rename = "fsc21")]
    Fsc21,
    #[serde(rename = "fsc30")]
    Fsc30,
    #[serde(rename = "fsc31")]
    Fsc31,
    #[serde(rename = "fsc40")]
    Fsc40,
    #[serde(rename = "fsc41")]
    Fsc41,
}

lower_display!(FscTag, FscTag::Fsc00 => "fsc00", FscTag::Fsc10 => "fsc10", FscTag::Fsc20 => "fsc20", FscTag::Fsc21 => "fsc21",
    FscTag::Fsc30 => "fsc30", FscTag::Fsc31 => "fsc31", FscTag::Fsc40 => "fsc40", FscTag::Fsc41 => "fsc41");

impl FscTag {
    pub const ALL: [FscTag; 8] =
        [FscTag::Fsc00, FscTag::Fsc10, FscTag::Fsc20, FscTag::Fsc21, FscTag::Fsc30, FscTag::Fsc31, FscTag::Fsc40, FscTag::Fsc41];
}

impl std::str::FromStr for FscTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FscTag::ALL
            .into_iter()
            .find(|t| t.to_string() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown state combination tag {s:?}")))
    }
}

/// The ego's role when it armed a maneuver automaton.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Attacker,
    Defender,
}

/// Shared plan handle; payloads are immutable once published.
pub type Plan = Arc<PlannerOutput>;

/// Internal wires between the three automatons. The global references are
/// implicit and always available.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SignalBus {
    pub sg00: bool,
    pub sg01: bool,
    pub sg02: bool,
    pub sg03: Option<Plan>,
    pub sg04: Option<Plan>,
    pub sg10: bool,
    pub sg11: bool,
    pub sg12: bool,
    pub sg13: Option<Plan>,
    pub sg14: Option<Plan>,
    /// Plan handed from the supervisor to the overtake automaton.
    pub staged_overtake: Option<Plan>,
    /// Plan handed from the supervisor to the defense automaton.
    pub staged_defense: Option<Plan>,
}

impl SignalBus {
    pub fn check(&self) -> Result<()> {
        if self.sg01 && !self.sg00 {
            return Err(Error::Invariant("overtake initiated while disarmed".into()));
        }
        if self.sg11 && !self.sg10 {
            return Err(Error::Invariant("defense initiated while disarmed".into()));
        }
        if (self.sg03.is_some() || self.sg04.is_some()) && (self.sg13.is_some() || self.sg14.is_some()) {
            return Err(Error::Invariant("overtake and defense payloads published together".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trigger_defaults_and_validation() {
        let t = TriggerSet::default();
        assert!(t.validate().is_ok());
        assert_eq!((t.trig0, t.trig6, t.trig7, t.trig8), (150.0, 6.0, 1.5, 7.5));
        assert!(t.in_follow_window(27.0));
        assert!(!t.in_follow_window(24.9));
        assert!(TriggerSet { trig1: 30.0, trig2: 25.0, ..t }.validate().is_err());
        assert!(TriggerSet { trig7: 7.0, ..t }.validate().is_err());
        assert!(TriggerSet { trig0: 20.0, ..t }.validate().is_err());
    }

    #[test]
    fn ohv_legality() {
        for v in [0u8, 1, 2, 4, 8] {
            assert!(OhvWord(v).is_legal_intent());
        }
        assert!(!OhvWord(3).is_legal_intent());
        for v in [0u8, 1, 2, 3, 4, 8, 12] {
            assert!(OhvWord(v).is_legal_override());
        }
        assert!(!OhvWord(5).is_legal_override());
    }

    #[test]
    fn tag_round_trip() {
        for t in FscTag::ALL {
            assert_eq!(t.to_string().parse::<FscTag>().unwrap(), t);
            assert_eq!(serde_json::to_string(&t).unwrap(), format!("\"{t}\""));
        }
        assert!("fsc99".parse::<FscTag>().is_err());
    }
}
