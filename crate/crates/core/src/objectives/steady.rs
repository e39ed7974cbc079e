//! Stage-1 objective: boundary flows and short-circuit levels.

use serde::{Deserialize, Serialize};

use super::ObjectiveConfig;
use crate::error::{Error, Result};
use crate::grid::Network;
use crate::steady::{
    element_flow, short_circuits, solve_power_flow, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE,
};

/// Power entering a flow element from a boundary bus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    /// Branch id, or area id for the total flow into that area.
    pub element: String,
    pub bus: String,
    pub p_mw: f64,
    pub q_mvar: f64,
}

impl FlowRecord {
    pub fn key(&self) -> String {
        format!("{}@{}", self.element, self.bus)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SccRecord {
    pub bus: String,
    pub skss_mva: f64,
    pub ikss_ka: f64,
}

/// Flows and short-circuit levels of one network at the compared points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyReference {
    pub flows: Vec<FlowRecord>,
    pub scc: Vec<SccRecord>,
}

/// Evaluates `net` at the flow elements `(element, bus)` and short-circuit
/// buses of `template`, with pre-fault voltages from the power flow.
pub fn steady_reference(
    net: &Network,
    elements: &[(String, String)],
    scc_buses: &[String],
    c_factor: f64,
) -> Result<SteadyReference> {
    let sol = solve_power_flow(net, DEFAULT_TOLERANCE, DEFAULT_MAX_ITER)?;
    sol.ensure_converged()?;
    let v = sol.voltages();
    let flows = elements
        .iter()
        .map(|(element, bus)| {
            let s = element_flow(net, &v, element, bus)?;
            Ok(FlowRecord {
                element: element.clone(),
                bus: bus.clone(),
                p_mw: s.re,
                q_mvar: s.im,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let buses: Vec<&str> = scc_buses.iter().map(String::as_str).collect();
    let prefault = buses
        .iter()
        .map(|b| {
            net.bus_index(b)
                .map(|k| sol.v[k])
                .ok_or_else(|| Error::UnknownElement(format!("bus '{b}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    let scc = short_circuits(net, &buses, c_factor, &prefault)?
        .into_iter()
        .map(|r| SccRecord {
            bus: r.bus,
            skss_mva: r.skss_mva,
            ikss_ka: r.ikss_ka,
        })
        .collect();
    Ok(SteadyReference { flows, scc })
}

/// The two normalized mismatch components of the stage-1 objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyComponents {
    /// Mean over flow elements of `((ΔP/s)² + (ΔQ/s)²)/2`, `s = max(|S_ref|, 1 % of S_base)`.
    pub flow: f64,
    /// Mean over boundary buses of `(ΔSkss/Skss_ref)²`.
    pub short_circuit: f64,
}

/// Mismatch components of `candidate` against `reference`. Numerical
/// failures (non-convergence, isolated buses) are returned as errors.
pub fn steady_components(
    candidate: &Network,
    reference: &SteadyReference,
    c_factor: f64,
) -> Result<SteadyComponents> {
    let missing: Vec<String> = reference
        .flows
        .iter()
        .filter(|f| crate::grid::flow_branches(candidate, &f.element, &f.bus).is_err())
        .map(FlowRecord::key)
        .chain(
            reference
                .scc
                .iter()
                .filter(|s| candidate.bus(&s.bus).is_none())
                .map(|s| format!("short circuit at {}", s.bus)),
        )
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingReference(format!(
            "candidate network lacks: {}",
            missing.join(", ")
        )));
    }
    let elements: Vec<(String, String)> = reference
        .flows
        .iter()
        .map(|f| (f.element.clone(), f.bus.clone()))
        .collect();
    let buses: Vec<String> = reference.scc.iter().map(|s| s.bus.clone()).collect();
    let cand = steady_reference(candidate, &elements, &buses, c_factor)?;

    let floor = 0.01 * candidate.s_base_mva();
    let flow = if reference.flows.is_empty() {
        0.0
    } else {
        reference
            .flows
            .iter()
            .zip(&cand.flows)
            .map(|(r, c)| {
                let s = r.p_mw.hypot(r.q_mvar).max(floor);
                let dp = (c.p_mw - r.p_mw) / s;
                let dq = (c.q_mvar - r.q_mvar) / s;
                0.5 * (dp * dp + dq * dq)
            })
            .sum::<f64>()
            / reference.flows.len() as f64
    };
    let short_circuit = if reference.scc.is_empty() {
        0.0
    } else {
        reference
            .scc
            .iter()
            .zip(&cand.scc)
            .map(|(r, c)| ((c.skss_mva - r.skss_mva) / r.skss_mva).powi(2))
            .sum::<f64>()
            / reference.scc.len() as f64
    };
    Ok(SteadyComponents {
        flow,
        short_circuit,
    })
}

/// `w₁·F_PF + w₂·F_SHC`; numerical failure of the candidate yields the penalty.
pub fn steady_state_objective(
    candidate: &Network,
    reference: &SteadyReference,
    config: &ObjectiveConfig,
) -> Result<f64> {
    config.validate()?;
    match steady_components(candidate, reference, config.c_factor) {
        Ok(c) => {
            let f = config.weights[0] * c.flow + config.weights[1] * c.short_circuit;
            Ok(if f.is_finite() {
                f.min(config.penalty)
            } else {
                config.penalty
            })
        }
        Err(e) if e.is_numerical() => Ok(config.penalty),
        Err(e) => Err(e),
    }
}
