//! Reference measurements taken on the full (or a known) network.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{init_dynamic_state, simulate, ChannelId, Quantity, Scenario, SimConfig};
use crate::error::{Error, Result};
use crate::grid::Network;
use crate::objectives::{steady_reference, ScenarioReference, SteadyReference};
use crate::pmu::{read_record_file, write_records};
use crate::steady::{solve_power_flow, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE};

use super::layout;

/// Flow elements compared at the boundary: every in-service branch incident
/// to a boundary bus, with all branches into one replaced area merged under
/// the area id (the equivalent's series branch takes their place).
pub fn boundary_elements(net: &Network, replaced_areas: &[&str]) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::new();
    for bus in net.boundary_buses() {
        for br in net.branches().iter().filter(|b| b.in_service()) {
            let Some(far) = br.other_end(&bus.id) else {
                continue;
            };
            let far_area = net.bus(far).and_then(|b| b.area.as_deref());
            let element = match far_area {
                Some(a) if replaced_areas.contains(&a) => a.to_string(),
                _ => br.id.clone(),
            };
            let key = (element, bus.id.clone());
            if !out.contains(&key) {
                out.push(key);
            }
        }
    }
    out
}

/// Boundary measurement set: voltage magnitude and angle and frequency at
/// each boundary bus, active and reactive flow of each boundary element.
pub fn default_monitors(net: &Network, elements: &[(String, String)]) -> Vec<ChannelId> {
    let mut out = Vec::new();
    for bus in net.boundary_buses() {
        for q in [Quantity::VmagPu, Quantity::VangRad, Quantity::FreqHz] {
            out.push(ChannelId::new(bus.id.clone(), q));
        }
        for (el, b) in elements.iter().filter(|(_, b)| *b == bus.id) {
            for q in [Quantity::PMw, Quantity::QMvar] {
                out.push(ChannelId::new(format!("{el}@{b}"), q));
            }
        }
    }
    out
}

/// Everything the identification stages compare against.
#[derive(Debug, Clone, PartialEq)]
pub struct References {
    pub f_nominal_hz: f64,
    pub steady: SteadyReference,
    pub scenarios: Vec<ScenarioReference>,
}

fn check_scenario_name(name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(
            format!("scenario '{name}'"),
            "names may only contain ASCII letters, digits, '-' and '_'",
        ))
    }
}

/// Base-case flows and short-circuit levels plus one simulated record per
/// scenario, all on `net`.
pub fn generate_references(
    net: &Network,
    elements: &[(String, String)],
    scenarios: &[Scenario],
    monitors: &[ChannelId],
    sim: &SimConfig,
    c_factor: f64,
) -> Result<References> {
    for s in scenarios {
        check_scenario_name(&s.name)?;
        s.validate(net)?;
    }
    let scc_buses: Vec<String> = net.boundary_buses().map(|b| b.id.clone()).collect();
    let steady = steady_reference(net, elements, &scc_buses, c_factor)?;
    let sol = solve_power_flow(net, DEFAULT_TOLERANCE, DEFAULT_MAX_ITER)?;
    sol.ensure_converged()?;
    let state0 = init_dynamic_state(net, &sol, sim)?;
    let scenarios = scenarios
        .iter()
        .map(|s| {
            let record = simulate(net, &state0, &s.events, s.t_end(), monitors, sim)?;
            Ok(ScenarioReference {
                scenario: s.clone(),
                record,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(References {
        f_nominal_hz: net.f_nominal_hz(),
        steady,
        scenarios,
    })
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        context: path.display().to_string(),
        source: e,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        context: path.display().to_string(),
        source: e,
    })
}

pub(crate) fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Persists `refs` under `<run_dir>/references/`.
pub fn write_references(run_dir: &Path, refs: &References) -> Result<()> {
    let dir = run_dir.join(layout::REFERENCES);
    create_dir(&dir)?;
    write_json(&dir.join(layout::STEADY_REFERENCE), &refs.steady)?;
    let scenarios: Vec<&Scenario> = refs.scenarios.iter().map(|r| &r.scenario).collect();
    write_json(&dir.join(layout::SCENARIOS), &scenarios)?;
    for r in &refs.scenarios {
        write_records(
            &r.record,
            refs.f_nominal_hz,
            &dir.join(format!("{}.csv", r.scenario.name)),
        )?;
    }
    Ok(())
}

/// Reads the references persisted by [`write_references`].
pub fn read_references(run_dir: &Path) -> Result<References> {
    let dir = run_dir.join(layout::REFERENCES);
    let steady: SteadyReference = read_json(&dir.join(layout::STEADY_REFERENCE))?;
    let scenarios: Vec<Scenario> = read_json(&dir.join(layout::SCENARIOS))?;
    let mut f_nominal_hz = None;
    let scenarios = scenarios
        .into_iter()
        .map(|scenario| {
            let path = dir.join(format!("{}.csv", scenario.name));
            if !path.exists() {
                return Err(Error::MissingReference(format!(
                    "record of scenario '{}' ({})",
                    scenario.name,
                    path.display()
                )));
            }
            let rec = read_record_file(&path)?;
            f_nominal_hz = Some(rec.f_nominal_hz);
            Ok(ScenarioReference {
                scenario,
                record: rec.signals,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(References {
        f_nominal_hz: f_nominal_hz.unwrap_or(50.0),
        steady,
        scenarios,
    })
}
