//! Runtime trace checking over logged state-combination streams.

use serde::{Deserialize, Serialize};

use crate::automata::FscTag;
use crate::error::{Error, Result};

use FscTag::*;

/// One logged combination change. `fsc` is `None` for a combination outside
/// the valid table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub t: f64,
    pub car: usize,
    pub fsc: Option<FscTag>,
    /// The change was a supervisor cut-off (zone exit or lost opponent).
    #[serde(default)]
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManeuverKind {
    Overtake,
    Defense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Failed,
    Dnf,
    /// Completed but matching no pattern.
    Counterexample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManeuverTrace {
    pub car: usize,
    pub kind: ManeuverKind,
    /// Tags with consecutive duplicates removed, starting at `fsc10`.
    pub sequence: Vec<FscTag>,
    pub outcome: Outcome,
    pub t_start: f64,
    pub t_end: f64,
    /// From entering a pass or block state until leaving the last one;
    /// `None` when the trace never got that far.
    #[serde(default)]
    pub active: Option<(f64, f64)>,
}

impl ManeuverTrace {
    pub fn is_dnf(&self) -> bool {
        self.outcome == Outcome::Dnf
    }

    /// Both cars were in a pass or block state at the same time. Waiting
    /// and arming alone do not count.
    fn overlaps(&self, other: &ManeuverTrace) -> bool {
        match (self.active, other.active) {
            (Some((a0, a1)), Some((b0, b1))) => a0 < b1 && b0 < a1,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    /// Successful overtake.
    E0,
    /// Abandoned overtake.
    E1,
    /// Successful defense.
    E2,
    /// Failed defense.
    E3,
}

impl Pattern {
    pub const ALL: [Pattern; 4] = [Pattern::E0, Pattern::E1, Pattern::E2, Pattern::E3];

    pub fn sequence(self) -> &'static [FscTag] {
        match self {
            Pattern::E0 => &[Fsc10, Fsc20, Fsc30, Fsc20, Fsc10],
            Pattern::E1 => &[Fsc10, Fsc20, Fsc30, Fsc31, Fsc20, Fsc10],
            Pattern::E2 => &[Fsc10, Fsc21, Fsc40, Fsc21, Fsc10],
            Pattern::E3 => &[Fsc10, Fsc21, Fsc40, Fsc41, Fsc21, Fsc10],
        }
    }

    pub fn is_success(self) -> bool {
        matches!(self, Pattern::E0 | Pattern::E2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Classification {
    Matched(Pattern),
    Counterexample(Vec<FscTag>),
}

/// First event outside the valid table, if any.
pub fn validate_fsc_stream(events: &[TraceEvent]) -> Option<TraceEvent> {
    events.iter().find(|e| e.fsc.is_none()).copied()
}

/// Compares a completed trace against the four patterns.
pub fn classify(trace: &ManeuverTrace) -> Result<Classification> {
    if trace.is_dnf() {
        return Err(Error::Parameter("an unfinished trace cannot be classified".into()));
    }
    Ok(Pattern::ALL
        .into_iter()
        .find(|p| p.sequence() == trace.sequence.as_slice())
        .map(Classification::Matched)
        .unwrap_or_else(|| Classification::Counterexample(trace.sequence.clone())))
}

fn is_active(tag: FscTag) -> bool {
    matches!(tag, Fsc30 | Fsc31 | Fsc40 | Fsc41)
}

fn finish(car: usize, stamped: Vec<(FscTag, f64)>, t_end: f64, dnf: bool) -> Option<ManeuverTrace> {
    let t_start = stamped[0].1;
    let first = stamped.iter().position(|(tag, _)| is_active(*tag));
    let active = first.map(|i| {
        let last = stamped.iter().rposition(|(tag, _)| is_active(*tag)).unwrap_or(i);
        (stamped[i].1, stamped.get(last + 1).map_or(t_end, |(_, t)| *t))
    });
    let seq: Vec<FscTag> = stamped.into_iter().map(|(tag, _)| tag).collect();
    if !dnf && active.is_none() {
        // A wait that ended without starting a maneuver.
        return None;
    }
    let kind = match seq.get(1) {
        Some(Fsc21 | Fsc40 | Fsc41) => ManeuverKind::Defense,
        _ => ManeuverKind::Overtake,
    };
    let mut trace = ManeuverTrace { car, kind, sequence: seq, outcome: Outcome::Dnf, t_start, t_end, active };
    if !dnf {
        trace.outcome = Outcome::Counterexample;
        trace.outcome = match classify(&trace).expect("trace is complete") {
            Classification::Matched(p) if p.is_success() => Outcome::Success,
            Classification::Matched(_) => Outcome::Failed,
            Classification::Counterexample(_) => Outcome::Counterexample,
        };
    }
    Some(trace)
}

/// Splits one car's stream into maneuver traces. An excursion from `fsc10`
/// that returns normally is a trace when it reached a maneuver state; one
/// cut off by a truncation, a stand-down or the end of the stream is `dnf`.
pub fn segment_maneuvers(events: &[TraceEvent]) -> Vec<ManeuverTrace> {
    let mut out = Vec::new();
    let mut last: Option<FscTag> = None;
    // Tags of the open excursion, each with the time it was entered.
    let mut open: Option<Vec<(FscTag, f64)>> = None;
    let mut car = 0;
    let mut t_last = 0.0;
    for e in events {
        let Some(tag) = e.fsc else { continue };
        car = e.car;
        t_last = e.t;
        if last == Some(tag) {
            continue;
        }
        match (&mut open, tag) {
            (None, Fsc10 | Fsc00) => {}
            (None, _) => {
                if last == Some(Fsc10) {
                    open = Some(vec![(Fsc10, e.t), (tag, e.t)]);
                }
            }
            (Some(seq), Fsc10) => {
                seq.push((Fsc10, e.t));
                out.extend(finish(e.car, open.take().unwrap(), e.t, e.truncated));
            }
            (Some(_), Fsc00) => {
                out.extend(finish(e.car, open.take().unwrap(), e.t, true));
            }
            (Some(seq), _) => seq.push((tag, e.t)),
        }
        last = Some(tag);
    }
    if let Some(seq) = open {
        out.extend(finish(car, seq, t_last, true));
    }
    out
}

/// Attempt-level counters for one car and session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CounterSet {
    pub n_ot1: u64,
    pub n_ot2: u64,
    pub n_ot3: u64,
    pub n_ot45: u64,
    pub n_ot_dnf: u64,
    pub n_df1: u64,
    pub n_df2: u64,
    pub n_df3: u64,
    pub n_df45: u64,
    pub n_df_dnf: u64,
}

impl CounterSet {
    pub fn conserved(&self) -> bool {
        self.n_ot2 == self.n_ot3 + self.n_ot45 + self.n_ot_dnf && self.n_df2 == self.n_df3 + self.n_df45 + self.n_df_dnf
    }

    /// Defense attempts that ended in a fallback.
    pub fn failed_defenses(&self) -> u64 {
        self.n_df2 - self.n_df3 - self.n_df_dnf
    }
}

/// Counts traces; counterexamples count as attempts only, so they break
/// conservation.
pub fn tally<'a>(traces: impl IntoIterator<Item = &'a ManeuverTrace>, opportunities: (u64, u64)) -> CounterSet {
    let mut c = CounterSet { n_ot1: opportunities.0, n_df1: opportunities.1, ..Default::default() };
    for t in traces {
        let (attempts, success, failed, dnf) = match t.kind {
            ManeuverKind::Overtake => (&mut c.n_ot2, &mut c.n_ot3, &mut c.n_ot45, &mut c.n_ot_dnf),
            ManeuverKind::Defense => (&mut c.n_df2, &mut c.n_df3, &mut c.n_df45, &mut c.n_df_dnf),
        };
        *attempts += 1;
        match t.outcome {
            Outcome::Success => *success += 1,
            Outcome::Failed => *failed += 1,
            Outcome::Dnf => *dnf += 1,
            Outcome::Counterexample => {}
        }
    }
    c
}

/// Traces of `own` that overlap a finished, opposite-kind trace of `other`.
pub fn engaged_traces<'a>(own: &'a [ManeuverTrace], other: &[ManeuverTrace]) -> Vec<&'a ManeuverTrace> {
    own.iter()
        .filter(|t| !t.is_dnf())
        .filter(|t| other.iter().any(|o| !o.is_dnf() && o.kind != t.kind && o.overlaps(t)))
        .collect()
}

/// Each side's successful overtakes equal the other's failed defenses.
pub fn cross_check(a: &CounterSet, b: &CounterSet) -> bool {
    a.n_df2 >= a.n_df3 + a.n_df_dnf
        && b.n_df2 >= b.n_df3 + b.n_df_dnf
        && a.n_ot3 == b.failed_defenses()
        && b.n_ot3 == a.failed_defenses()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub car: usize,
    pub t: f64,
    pub sequence: Vec<FscTag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub fsc_valid: bool,
    pub first_invalid: Option<TraceEvent>,
    pub sequences_ok: bool,
    pub counterexamples: Vec<Counterexample>,
    pub conservation_ok: bool,
    /// `None` when either car is scripted and the check does not apply.
    pub cross_check_ok: Option<bool>,
    pub counters: Vec<CounterSet>,
    pub engaged: Vec<CounterSet>,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.fsc_valid && self.sequences_ok && self.conservation_ok && self.cross_check_ok != Some(false)
    }
}

/// Full verdict for a two-car session. `opportunities[car]` is
/// `(overtake, defense)`; `full_framework` is false with a scripted car.
pub fn verify_session(events: &[TraceEvent], opportunities: [(u64, u64); 2], full_framework: bool) -> Verdict {
    let first_invalid = validate_fsc_stream(events);
    let per_car: Vec<Vec<TraceEvent>> = (0..2).map(|c| events.iter().filter(|e| e.car == c).copied().collect()).collect();
    let traces: Vec<Vec<ManeuverTrace>> = per_car.iter().map(|ev| segment_maneuvers(ev)).collect();
    let counterexamples: Vec<Counterexample> = traces
        .iter()
        .flatten()
        .filter(|t| t.outcome == Outcome::Counterexample)
        .map(|t| Counterexample { car: t.car, t: t.t_start, sequence: t.sequence.clone() })
        .collect();
    let counters: Vec<CounterSet> = (0..2).map(|c| tally(&traces[c], opportunities[c])).collect();
    let engaged: Vec<CounterSet> = (0..2).map(|c| tally(engaged_traces(&traces[c], &traces[1 - c]), (0, 0))).collect();
    Verdict {
        fsc_valid: first_invalid.is_none(),
        first_invalid,
        sequences_ok: counterexamples.is_empty(),
        counterexamples,
        conservation_ok: counters.iter().all(CounterSet::conserved),
        cross_check_ok: full_framework.then(|| cross_check(&engaged[0], &engaged[1])),
        counters,
        engaged,
    }
}
