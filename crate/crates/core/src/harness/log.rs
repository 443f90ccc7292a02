//! JSONL event log: one `{t, car, kind, payload}` object per line.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::automata::{fsc_of, AutomatonStates, FscTag, Role, Transition};
use crate::error::{Error, Result};
use crate::race_control::Violation;
use crate::verification::TraceEvent;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEvent {
    pub t: f64,
    pub car: usize,
    pub kind: String,
    pub payload: Value,
}

impl LogEvent {
    pub fn transition(t: f64, car: usize, tr: &Transition) -> Self {
        Self::new(t, car, "transition", json!({"automaton": tr.automaton, "from": tr.from, "to": tr.to, "guard": tr.guard}))
    }

    pub fn fsc(t: f64, car: usize, states: &AutomatonStates, truncated: bool) -> Self {
        let tag = fsc_of(states).map_or_else(|| "invalid".to_string(), |f| f.to_string());
        Self::new(
            t,
            car,
            "fsc",
            json!({"fsc": tag, "argos": states.argos, "autopass": states.autopass, "kaval": states.kaval, "truncated": truncated}),
        )
    }

    pub fn violation(v: &Violation) -> Self {
        Self::new(v.t, v.car, "violation", json!({"rule": v.rule, "detail": v.detail, "value": v.value}))
    }

    pub fn opportunity(t: f64, car: usize, role: Role) -> Self {
        Self::new(t, car, "opportunity", json!({"role": role}))
    }

    pub fn new(t: f64, car: usize, kind: &str, payload: Value) -> Self {
        Self { t, car, kind: kind.into(), payload }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("event serializes")
    }
}

/// What verification needs from a log.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedLog {
    pub events: Vec<LogEvent>,
    pub trace: Vec<TraceEvent>,
    /// Log line of each trace event.
    pub trace_lines: Vec<usize>,
    /// `(overtake, defense)` opportunities per car.
    pub opportunities: [(u64, u64); 2],
    /// Cars that logged state combinations, i.e. ran the automaton network.
    pub framework_cars: [bool; 2],
}

impl ParsedLog {
    pub fn full_framework(&self) -> bool {
        self.framework_cars.iter().all(|c| *c)
    }
}

fn bad(line: usize, msg: impl Into<String>) -> Error {
    Error::LogParse { line, msg: msg.into() }
}

/// Parses a log; line numbers in errors are 1-based.
pub fn parse_log(text: &str) -> Result<ParsedLog> {
    let mut out = ParsedLog::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let ev: LogEvent = serde_json::from_str(raw).map_err(|e| bad(line, e.to_string()))?;
        if ev.car > 1 {
            return Err(bad(line, format!("car index {} out of range", ev.car)));
        }
        match ev.kind.as_str() {
            "fsc" => {
                let tag = ev.payload.get("fsc").and_then(Value::as_str).ok_or_else(|| bad(line, "fsc event without a tag"))?;
                let mut fsc = if tag == "invalid" { None } else { Some(tag.parse::<FscTag>().map_err(|e| bad(line, e.to_string()))?) };
                // The state triple, when present, decides; a tag that
                // disagrees with it marks the record invalid.
                if let (Some(a), Some(p), Some(k)) = (ev.payload.get("argos"), ev.payload.get("autopass"), ev.payload.get("kaval")) {
                    let states = AutomatonStates {
                        argos: serde_json::from_value(a.clone()).map_err(|e| bad(line, e.to_string()))?,
                        autopass: serde_json::from_value(p.clone()).map_err(|e| bad(line, e.to_string()))?,
                        kaval: serde_json::from_value(k.clone()).map_err(|e| bad(line, e.to_string()))?,
                    };
                    let derived = fsc_of(&states);
                    if derived != fsc {
                        fsc = None;
                    }
                }
                let truncated = ev.payload.get("truncated").and_then(Value::as_bool).unwrap_or(false);
                out.framework_cars[ev.car] = true;
                out.trace.push(TraceEvent { t: ev.t, car: ev.car, fsc, truncated });
                out.trace_lines.push(line);
            }
            "opportunity" => {
                let role: Role = serde_json::from_value(ev.payload.get("role").cloned().unwrap_or(Value::Null))
                    .map_err(|e| bad(line, e.to_string()))?;
                let o = &mut out.opportunities[ev.car];
                match role {
                    Role::Attacker => o.0 += 1,
                    Role::Defender => o.1 += 1,
                }
            }
            _ => {}
        }
        out.events.push(ev);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{ArgosState, KavalState};

    fn race_states() -> AutomatonStates {
        AutomatonStates { argos: ArgosState::Race, ..AutomatonStates::default() }
    }

    #[test]
    fn round_trip_and_counts() {
        let lines = [
            LogEvent::fsc(0.0, 0, &race_states(), false).to_line(),
            LogEvent::opportunity(1.0, 0, Role::Attacker).to_line(),
            LogEvent::opportunity(1.0, 1, Role::Defender).to_line(),
            LogEvent::fsc(2.0, 0, &AutomatonStates { kaval: KavalState::Fallback, ..race_states() }, true).to_line(),
        ];
        let log = parse_log(&lines.join("\n")).unwrap();
        assert_eq!(log.trace.len(), 2);
        assert_eq!(log.trace[1].fsc, None);
        assert!(log.trace[1].truncated);
        assert_eq!(log.opportunities, [(1, 0), (0, 1)]);
        assert_eq!(log.framework_cars, [true, false]);
        assert_eq!(log.trace_lines, vec![1, 4]);
    }

    #[test]
    fn tampered_triple_is_invalid() {
        let good = LogEvent::fsc(0.0, 0, &race_states(), false).to_line();
        assert_eq!(parse_log(&good).unwrap().trace[0].fsc, Some(FscTag::Fsc10));
        let bad = good.replace("\"race\"", "\"overtake\"");
        assert_eq!(parse_log(&bad).unwrap().trace[0].fsc, None);
    }

    #[test]
    fn reports_offending_line() {
        let text = format!("{}\nnot json\n", LogEvent::fsc(0.0, 0, &race_states(), false).to_line());
        match parse_log(&text) {
            Err(Error::LogParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let unknown = r#"{"t":0.0,"car":0,"kind":"fsc","payload":{"fsc":"fsc99"}}"#;
        assert!(parse_log(unknown).is_err());
    }
}
