//! Disturbance scripting: load steps, faults and line trips.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Network;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// Step change of one load, relative (`fraction`) or absolute (`delta_*`).
    LoadStep,
    /// Shunt fault at a bus, removed after `clearing_s`.
    BusFault,
    /// Shunt fault at `location` along a branch, cleared after `clearing_s`
    /// by taking the branch out of service.
    LineFaultAndTrip,
    /// Branch taken out of service.
    LineTrip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Event {
    pub kind: EventKind,
    /// Load id, bus id or branch id depending on `kind`.
    pub target: String,
    pub t_start: f64,
    /// Relative load change, e.g. 0.3 for +30 %.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_p_mw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_q_mvar: Option<f64>,
    /// Fault position along the branch, from the `from` end, in (0, 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<f64>,
    /// Fault duration, seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clearing_s: Option<f64>,
}

impl Event {
    pub fn load_step(load: &str, t_start: f64, fraction: f64) -> Self {
        Event {
            kind: EventKind::LoadStep,
            target: load.to_string(),
            t_start,
            fraction: Some(fraction),
            delta_p_mw: None,
            delta_q_mvar: None,
            location: None,
            clearing_s: None,
        }
    }

    pub fn load_step_mw(load: &str, t_start: f64, delta_p_mw: f64, delta_q_mvar: f64) -> Self {
        Event {
            delta_p_mw: Some(delta_p_mw),
            delta_q_mvar: Some(delta_q_mvar),
            fraction: None,
            ..Event::load_step(load, t_start, 0.0)
        }
    }

    pub fn bus_fault(bus: &str, t_start: f64, clearing_s: f64) -> Self {
        Event {
            kind: EventKind::BusFault,
            clearing_s: Some(clearing_s),
            fraction: None,
            ..Event::load_step(bus, t_start, 0.0)
        }
    }

    pub fn line_fault_and_trip(branch: &str, t_start: f64, location: f64, clearing_s: f64) -> Self {
        Event {
            kind: EventKind::LineFaultAndTrip,
            location: Some(location),
            clearing_s: Some(clearing_s),
            fraction: None,
            ..Event::load_step(branch, t_start, 0.0)
        }
    }

    pub fn line_trip(branch: &str, t_start: f64) -> Self {
        Event {
            kind: EventKind::LineTrip,
            fraction: None,
            ..Event::load_step(branch, t_start, 0.0)
        }
    }

    /// Checks parameters and that the target exists in `net`.
    pub fn validate(&self, net: &Network) -> Result<()> {
        let what = format!("{:?} event on '{}'", self.kind, self.target);
        if !(self.t_start >= 0.0 && self.t_start.is_finite()) {
            return Err(Error::invalid(what, "t_start must be non-negative"));
        }
        let clearing = || match self.clearing_s {
            Some(c) if c > 0.0 && c.is_finite() => Ok(()),
            _ => Err(Error::invalid(what.clone(), "clearing_s must be positive")),
        };
        match self.kind {
            EventKind::LoadStep => {
                if !net.loads().iter().any(|l| l.id == self.target) {
                    return Err(Error::UnknownElement(format!("load '{}'", self.target)));
                }
                let relative = self.fraction.is_some();
                let absolute = self.delta_p_mw.is_some() || self.delta_q_mvar.is_some();
                if relative == absolute {
                    return Err(Error::invalid(
                        what,
                        "give either fraction or delta_p_mw/delta_q_mvar",
                    ));
                }
            }
            EventKind::BusFault => {
                if net.bus(&self.target).is_none() {
                    return Err(Error::UnknownElement(format!("bus '{}'", self.target)));
                }
                clearing()?;
            }
            EventKind::LineFaultAndTrip => {
                if net.branch(&self.target).is_none() {
                    return Err(Error::UnknownElement(format!("branch '{}'", self.target)));
                }
                match self.location {
                    Some(l) if l > 0.0 && l < 1.0 => {}
                    _ => return Err(Error::invalid(what, "location must lie in (0, 1)")),
                }
                clearing()?;
            }
            EventKind::LineTrip => {
                if net.branch(&self.target).is_none() {
                    return Err(Error::UnknownElement(format!("branch '{}'", self.target)));
                }
            }
        }
        Ok(())
    }
}

/// Whether a scenario mainly excites frequency or voltage dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioClass {
    Frequency,
    Voltage,
}

impl ScenarioClass {
    /// Default simulated horizon, seconds.
    pub fn default_t_end(self) -> f64 {
        match self {
            ScenarioClass::Frequency => 20.0,
            ScenarioClass::Voltage => 10.0,
        }
    }
}

/// One disturbance run: a named list of events simulated to `t_end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub class: ScenarioClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    pub events: Vec<Event>,
}

impl Scenario {
    pub fn t_end(&self) -> f64 {
        self.t_end.unwrap_or_else(|| self.class.default_t_end())
    }

    pub fn validate(&self, net: &Network) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::invalid(
                format!("scenario '{}'", self.name),
                "name must be non-empty and usable as a file name",
            ));
        }
        if !(self.t_end() > 0.0) {
            return Err(Error::invalid(
                format!("scenario '{}'", self.name),
                "t_end must be positive",
            ));
        }
        for w in self.events.windows(2) {
            if w[1].t_start < w[0].t_start {
                return Err(Error::invalid(
                    format!("scenario '{}'", self.name),
                    "events must be sorted by t_start",
                ));
            }
        }
        self.events.iter().try_for_each(|e| e.validate(net))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScriptDoc {
    Bare(Vec<Event>),
    Scenarios { scenarios: Vec<Scenario> },
}

/// Parses an event script: either a bare list of events (one frequency
/// scenario named `events`) or `{"scenarios": [...]}`.
pub fn load_event_script(text: &str) -> Result<Vec<Scenario>> {
    let doc: ScriptDoc = serde_json::from_str(text).map_err(|e| Error::Schema {
        context: "event script".into(),
        message: e.to_string(),
    })?;
    let scenarios = match doc {
        ScriptDoc::Bare(events) => vec![Scenario {
            name: "events".into(),
            class: ScenarioClass::Frequency,
            t_end: None,
            events,
        }],
        ScriptDoc::Scenarios { scenarios } => scenarios,
    };
    let mut names = std::collections::HashSet::new();
    for s in &scenarios {
        if !names.insert(s.name.as_str()) {
            return Err(Error::invalid(
                format!("scenario '{}'", s.name),
                "duplicate name",
            ));
        }
    }
    Ok(scenarios)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_list_becomes_one_scenario() {
        let s = load_event_script(
            r#"[{"kind": "load_step", "target": "L1", "t_start": 1.0, "fraction": 0.3}]"#,
        )
        .unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].events[0], Event::load_step("L1", 1.0, 0.3));
    }

    #[test]
    fn scenario_document() {
        let s = load_event_script(
            r#"{"scenarios": [
                {"name": "fault", "class": "voltage", "events": [
                    {"kind": "line_fault_and_trip", "target": "B4-B6", "t_start": 1.0,
                     "location": 0.5, "clearing_s": 0.1}]}]}"#,
        )
        .unwrap();
        assert_eq!(s[0].t_end(), 10.0);
        assert_eq!(
            s[0].events[0],
            Event::line_fault_and_trip("B4-B6", 1.0, 0.5, 0.1)
        );
    }

    #[test]
    fn unknown_event_field_is_a_schema_error() {
        let err =
            load_event_script(r#"[{"kind": "line_trip", "target": "X", "t_start": 0, "when": 1}]"#)
                .unwrap_err();
        assert!(matches!(err, Error::Schema { .. }));
    }
}
