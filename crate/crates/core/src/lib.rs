//! Head-to-head autonomous racing with a supervisory automaton network.
//!
//! Two kinematic-bicycle racecars circulate a stadium oval. Each car runs a
//! network of three automatons (the supervisor, the overtake automaton and the
//! position-defense automaton) that decide when to follow the global raceline
//! and when to hand control to a quintic-spline local planner. A receding
//! horizon tracker turns the active reference into acceleration and steering
//! commands. Every run emits an event log whose framework-state stream is
//! checked against the valid state combinations and the four maneuver
//! sequences.
//!
//! Module map:
//!
//! - [`track`]: raceline, bounds, passing zones and the geometric helpers.
//! - [`vehicle`]: kinematic bicycle integration and the boost reservoir.
//! - [`planner`]: quintic segments, guide points and overtake timing.
//! - [`tracker`]: the receding-horizon path tracker.
//! - [`automata`]: supervisor, overtake and defense automatons, signal bus,
//!   output multiplexer and state-combination tags.
//! - [`race_control`]: flags, leadership, opponent intent and rules R1-R5.
//! - [`verification`]: trace validation, segmentation, classification, tallies.
//! - [`harness`]: scenario config, the lockstep race loop, sweeps and reports.

pub mod automata;
pub mod error;
pub mod harness;
pub mod planner;
pub mod race_control;
pub mod track;
pub mod tracker;
pub mod vehicle;
pub mod verification;

pub use error::{Error, Result};
pub use track::geometry::Point;
