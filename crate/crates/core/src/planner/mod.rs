//! Local planner: quintic splines through overtake and defense guide points,
//! plus the trapezoidal overtake-time model used to gate a pass.

pub mod guides;
pub mod quintic;
pub mod timing;
pub mod trajectory;

use serde::{Deserialize, Serialize};

pub use guides::{default_lateral_offset, defense_guides, overtake_guides, DefenseGuides, GuideGeometry, OvertakeGuides};
pub use quintic::{eval_quintic, fit_quintic, BoundaryState, QuinticSegment};
pub use timing::{feasible_overtake, overtake_times, OvertakeGeometry, OvertakeTimes};
pub use trajectory::{fit_guides, plan_trajectory, GuidePoint, PlanSource, PlannerOutput};

use crate::error::{Error, Result};

/// Which length sets the forward offset of the second overtake guide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForwardOffset {
    Wheelbase,
    CarLength,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Lateral offset `d` of the overtake guides. `None` picks
    /// `max(trig8, 0.6 · half width)`.
    pub lateral_offset: Option<f64>,
    pub g2_forward: ForwardOffset,
    /// Share of the boost speed used in the timing model.
    pub boost_fraction: f64,
    /// Diverge and merge angles for the timing model, rad.
    pub theta_diverge: f64,
    pub theta_merge: f64,
    /// Defense projection horizon, s.
    pub defense_horizon: f64,
    /// Superprojection distance in car lengths.
    pub defense_k_mult: f64,
    /// Lateral bias of the defense guide toward the opponent's overtake side, m.
    pub defense_lateral_bias: f64,
    /// How long the defender holds the blocking line, s.
    pub defense_hold: f64,
    /// Speed drop below the opponent during Abandon and Fallback, m/s.
    pub merge_speed_decrement: f64,
    /// Arc-length step of emitted plans, m.
    pub sample_step: f64,
    /// Raceline appended after a plan so the tracker never runs dry, m.
    pub continuation: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            lateral_offset: None,
            g2_forward: ForwardOffset::Wheelbase,
            boost_fraction: 1.0,
            theta_diverge: 0.35,
            theta_merge: 0.35,
            defense_horizon: 1.5,
            defense_k_mult: 1.0,
            defense_lateral_bias: 0.0,
            defense_hold: 3.0,
            merge_speed_decrement: 5.0,
            sample_step: 1.0,
            continuation: 200.0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        let half_pi = std::f64::consts::FRAC_PI_2;
        let checks = [
            ("boost_fraction", (0.0..=1.0).contains(&self.boost_fraction)),
            ("theta_diverge", self.theta_diverge > 0.0 && self.theta_diverge < half_pi),
            ("theta_merge", self.theta_merge > 0.0 && self.theta_merge < half_pi),
            ("defense_horizon", self.defense_horizon > 0.0),
            ("defense_k_mult", self.defense_k_mult >= 0.0),
            ("defense_lateral_bias", self.defense_lateral_bias.is_finite() && self.defense_lateral_bias >= 0.0),
            ("defense_hold", self.defense_hold >= 0.0),
            ("merge_speed_decrement", self.merge_speed_decrement >= 0.0),
            ("sample_step", self.sample_step > 0.0),
            ("continuation", self.continuation >= 0.0),
            ("lateral_offset", self.lateral_offset.map_or(true, |d| d > 0.0)),
        ];
        match checks.iter().find(|(_, ok)| !ok) {
            Some((name, _)) => Err(Error::Config(format!("planner.{name} is out of range"))),
            None => Ok(()),
        }
    }

    /// Resolved lateral offset for a given minimum lateral separation and
    /// track width.
    pub fn offset(&self, min_lateral_separation: f64, track_width: f64) -> f64 {
        self.lateral_offset.unwrap_or_else(|| default_lateral_offset(min_lateral_separation, track_width))
    }
}
