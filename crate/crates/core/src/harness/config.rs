//! Scenario and sweep configuration, loaded from TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::automata::{GuardConfig, TriggerSet};
use crate::error::{Error, Result};
use crate::planner::PlannerConfig;
use crate::race_control::{EstimatorConfig, RuleBook};
use crate::track::TrackConfig;
use crate::tracker::TrackerConfig;
use crate::vehicle::VehicleParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Full automaton network.
    #[default]
    Argos,
    /// Raceline follower that never arms a maneuver.
    Mule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarConfig {
    pub name: String,
    pub policy: Policy,
    pub vehicle: VehicleParams,
    pub tracker: TrackerConfig,
    pub triggers: TriggerSet,
    pub planner: PlannerConfig,
    /// Multiplier on the raceline speed profile.
    pub speed_scale: f64,
}

impl Default for CarConfig {
    fn default() -> Self {
        Self {
            name: String::new(),
            policy: Policy::Argos,
            vehicle: VehicleParams::default(),
            tracker: TrackerConfig::default(),
            triggers: TriggerSet::default(),
            planner: PlannerConfig::default(),
            speed_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub track: TrackConfig,
    pub laps: u32,
    pub sim_dt: f64,
    pub seed: u64,
    /// Raceline distance from the trailing car to the leading car at the
    /// start, m.
    pub initial_gap: f64,
    /// Uniform jitter applied to the initial gap, ± m.
    pub gap_jitter: f64,
    /// Uniform jitter applied to each car's starting lateral offset, ± m.
    pub lateral_jitter: f64,
    /// Arc position of the trailing car at the start, m.
    pub start_s: f64,
    /// Index of the car that starts ahead.
    pub starting_leader: usize,
    /// Speed limit carried by the Green and Blue flags, m/s.
    pub flag_velocity_limit: f64,
    /// Gap the follower holds behind the car ahead while on the raceline, m.
    pub follow_gap: f64,
    /// Speed correction per meter of follow-gap error, 1/s.
    pub follow_gain: f64,
    pub guards: GuardConfig,
    pub rules: RuleBook,
    pub estimator: EstimatorConfig,
    pub cars: Vec<CarConfig>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "race".into(),
            track: TrackConfig::default(),
            laps: 5,
            sim_dt: 0.02,
            seed: 0,
            initial_gap: 40.0,
            gap_jitter: 0.0,
            lateral_jitter: 0.0,
            start_s: 10.0,
            starting_leader: 1,
            flag_velocity_limit: 60.0,
            follow_gap: 27.5,
            follow_gain: 0.5,
            guards: GuardConfig::default(),
            rules: RuleBook::default(),
            estimator: EstimatorConfig::default(),
            cars: vec![CarConfig { name: "car0".into(), ..CarConfig::default() }, CarConfig { name: "car1".into(), ..CarConfig::default() }],
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.laps < 1 {
            return Err(Error::Config("laps must be at least 1".into()));
        }
        if !(self.sim_dt > 0.0 && self.sim_dt.is_finite()) {
            return Err(Error::Config("sim_dt must be positive".into()));
        }
        if self.cars.len() != 2 {
            return Err(Error::Config(format!("exactly 2 cars are required, got {}", self.cars.len())));
        }
        if self.starting_leader > 1 {
            return Err(Error::Config("starting_leader must be 0 or 1".into()));
        }
        let lap = 2.0 * self.track.straight_length + 2.0 * std::f64::consts::PI * (self.track.turn_radius - self.track.lane_offset);
        if !(self.initial_gap - self.gap_jitter > 0.0 && self.initial_gap + self.gap_jitter < lap / 2.0) {
            return Err(Error::Config("initial gap must stay within (0, half a lap) after jitter".into()));
        }
        let nonneg = [self.gap_jitter, self.lateral_jitter, self.start_s, self.follow_gap, self.follow_gain];
        if nonneg.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Config("jitter, start_s and follow settings must be non-negative".into()));
        }
        if !(self.flag_velocity_limit > 0.0) {
            return Err(Error::Config("flag_velocity_limit must be positive".into()));
        }
        let ratio = self.sim_dt;
        self.track.validate()?;
        self.rules.validate()?;
        for car in &self.cars {
            car.vehicle.validate()?;
            car.tracker.validate()?;
            car.triggers.validate()?;
            car.planner.validate()?;
            if !(car.speed_scale > 0.0 && car.speed_scale <= 1.5) {
                return Err(Error::Config(format!("car {}: speed_scale must lie in (0, 1.5]", car.name)));
            }
            let steps = car.tracker.dt / ratio;
            if (steps - steps.round()).abs() > 1e-9 || steps.round() < 1.0 {
                return Err(Error::Config("tracker dt must be a whole multiple of sim_dt".into()));
            }
        }
        Ok(())
    }

    /// Both cars run the automaton network.
    pub fn full_framework(&self) -> bool {
        self.cars.iter().all(|c| c.policy == Policy::Argos)
    }

    /// Returns a copy with the dotted field `path` set to `value`, e.g.
    /// `initial_gap`, `rules.boost_grant` or `cars.0.triggers.trig6`.
    pub fn with_field(&self, path: &str, value: f64) -> Result<Self> {
        let mut root = toml::Value::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        let mut node = &mut root;
        for key in path.split('.') {
            node = match node {
                toml::Value::Table(t) => t.get_mut(key),
                toml::Value::Array(a) => key.parse::<usize>().ok().and_then(|i| a.get_mut(i)),
                _ => None,
            }
            .ok_or_else(|| Error::Config(format!("unknown config field {path:?}")))?;
        }
        *node = match node {
            toml::Value::Float(_) => toml::Value::Float(value),
            toml::Value::Integer(_) if value.fract() == 0.0 => toml::Value::Integer(value as i64),
            _ => return Err(Error::Config(format!("field {path:?} is not numeric or does not accept {value}"))),
        };
        let cfg: Self = root.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A one-axis Monte-Carlo sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub base: ScenarioConfig,
    pub axis: String,
    pub values: Vec<f64>,
    pub seeds_per_value: u32,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() || self.seeds_per_value == 0 {
            return Err(Error::Config("a sweep needs at least one value and one seed".into()));
        }
        for v in &self.values {
            self.base.with_field(&self.axis, *v)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = ScenarioConfig::default();
        cfg.validate().unwrap();
        let back = ScenarioConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_scenarios() {
        assert!(ScenarioConfig::from_toml_str("laps = 0").is_err());
        assert!(ScenarioConfig::from_toml_str("sim_dt = 0.0").is_err());
        assert!(ScenarioConfig::from_toml_str("bogus = 1").is_err());
        let one_car = "[[cars]]\nname = \"solo\"\n";
        assert!(ScenarioConfig::from_toml_str(one_car).is_err());
    }

    #[test]
    fn partial_file_fills_defaults() {
        let text = "laps = 2\n[[cars]]\nname = \"a\"\n[[cars]]\nname = \"m\"\npolicy = \"mule\"\nspeed_scale = 0.95\n[cars.triggers]\ntrig6 = 5.0\n";
        let cfg = ScenarioConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.laps, 2);
        assert_eq!(cfg.cars[1].policy, Policy::Mule);
        assert_eq!(cfg.cars[1].triggers.trig6, 5.0);
        assert_eq!(cfg.cars[0].triggers, TriggerSet::default());
        assert!(!cfg.full_framework());
    }

    #[test]
    fn dotted_fields() {
        let cfg = ScenarioConfig::default();
        assert_eq!(cfg.with_field("initial_gap", 80.0).unwrap().initial_gap, 80.0);
        assert_eq!(cfg.with_field("rules.boost_grant", 8.0).unwrap().rules.boost_grant, 8.0);
        assert_eq!(cfg.with_field("cars.1.triggers.trig6", 4.0).unwrap().cars[1].triggers.trig6, 4.0);
        assert_eq!(cfg.with_field("laps", 3.0).unwrap().laps, 3);
        assert!(cfg.with_field("nope", 1.0).is_err());
        assert!(cfg.with_field("laps", 0.0).is_err());
        assert!(cfg.with_field("name", 1.0).is_err());
    }
}
