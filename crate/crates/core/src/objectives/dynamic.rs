//! Stage-2 objective: recorded disturbance responses.

use serde::Serialize;

use super::indices::performance_index_from;
use super::{ObjectiveConfig, NORMALIZATION_FLOOR};
use crate::dynamics::{
    init_dynamic_state, simulate, ChannelId, Scenario, ScenarioClass, SignalSet, SimConfig,
};
use crate::error::{Error, Result};
use crate::grid::Network;
use crate::pmu::align;
use crate::steady::PowerFlowSolution;

/// A disturbance scenario together with its reference record.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReference {
    pub scenario: Scenario,
    pub record: SignalSet,
}

/// Index of one channel's error, normalized by the reference peak-to-peak.
pub fn channel_index(
    config: &ObjectiveConfig,
    reference: &[f64],
    candidate: &[f64],
    dt: f64,
    t0: f64,
) -> Result<f64> {
    let (lo, hi) = reference
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
            (l.min(*v), h.max(*v))
        });
    let range = (hi - lo).max(NORMALIZATION_FLOOR);
    let e: Vec<f64> = candidate
        .iter()
        .zip(reference)
        .map(|(c, r)| (c - r) / range)
        .collect();
    performance_index_from(config.index, &e, dt, t0)
}

/// Channel-weighted mean index of `candidate` against `reference`.
pub fn scenario_residual(
    config: &ObjectiveConfig,
    reference: &SignalSet,
    candidate: &SignalSet,
) -> Result<f64> {
    let (r, c) = align(reference, candidate)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (id, rv) in r.channels() {
        let w = config.channel_weights.weight(id.quantity);
        if w == 0.0 {
            continue;
        }
        let cv = c
            .channel(id)
            .ok_or_else(|| Error::MissingReference(format!("simulated channel '{id}'")))?;
        num += w * channel_index(config, rv, cv, r.dt(), r.start())?;
        den += w;
    }
    if den == 0.0 {
        return Err(Error::invalid(
            "dynamic objective",
            "no reference channel carries a positive weight",
        ));
    }
    Ok(num / den)
}

fn check_contract(refs: &[ScenarioReference]) -> Result<()> {
    let count = |c: ScenarioClass| refs.iter().filter(|r| r.scenario.class == c).count();
    if count(ScenarioClass::Frequency) != 1 || count(ScenarioClass::Voltage) != 1 || refs.len() != 2
    {
        return Err(Error::invalid(
            "dynamic objective",
            "exactly one frequency and one voltage scenario are required",
        ));
    }
    Ok(())
}

/// Residuals of the frequency and the voltage scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DynamicComponents {
    pub frequency: f64,
    pub voltage: f64,
}

/// Simulates every scenario on `candidate` (initialized at `sol`) and
/// returns the per-class residuals. Simulation failures are returned as
/// errors.
pub fn dynamic_components(
    candidate: &Network,
    sol: &PowerFlowSolution,
    references: &[ScenarioReference],
    sim: &SimConfig,
    config: &ObjectiveConfig,
) -> Result<DynamicComponents> {
    check_contract(references)?;
    let state0 = init_dynamic_state(candidate, sol, sim)?;
    let mut out = DynamicComponents {
        frequency: 0.0,
        voltage: 0.0,
    };
    for r in references {
        let monitors: Vec<ChannelId> = r.record.channels().keys().cloned().collect();
        let sim_out = simulate(
            candidate,
            &state0,
            &r.scenario.events,
            r.scenario.t_end(),
            &monitors,
            sim,
        )?;
        let v = scenario_residual(config, &r.record, &sim_out)?;
        match r.scenario.class {
            ScenarioClass::Frequency => out.frequency = v,
            ScenarioClass::Voltage => out.voltage = v,
        }
    }
    Ok(out)
}

/// `w₁·f_freq + w₂·f_volt` for `candidate` initialized at `sol`.
/// Initialization or simulation failure yields the penalty.
pub fn dynamic_objective(
    candidate: &Network,
    sol: &PowerFlowSolution,
    references: &[ScenarioReference],
    sim: &SimConfig,
    config: &ObjectiveConfig,
) -> Result<f64> {
    config.validate()?;
    match dynamic_components(candidate, sol, references, sim, config) {
        Ok(c) => {
            let f = config.weights[0] * c.frequency + config.weights[1] * c.voltage;
            Ok(if f.is_finite() {
                f.min(config.penalty)
            } else {
                config.penalty
            })
        }
        Err(e) if e.is_numerical() || matches!(e, Error::Initialization { .. }) => {
            Ok(config.penalty)
        }
        Err(e) => Err(e),
    }
}
