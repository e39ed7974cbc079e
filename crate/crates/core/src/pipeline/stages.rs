//! The two identification stages.

use indexmap::IndexMap;
use serde::Serialize;

use crate::dynamics::SimConfig;
use crate::error::{Error, Result};
use crate::grid::Network;
use crate::grid::{apply_ward_equivalent, equivalent_machine_id, WardEquivalentParams};
use crate::objectives::{
    dynamic_components, dynamic_objective, steady_components, steady_state_objective,
    DynamicComponents, ObjectiveConfig, ScenarioReference, SteadyComponents, SteadyReference,
};
use crate::optimizer::{optimize, OptimizationResult, ParameterSpace};
use crate::steady::{solve_power_flow, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE};

use super::config::StageConfig;
use super::params::{
    apply_dynamic_values, complete_template, default_dynamic_space, default_steady_space,
    dynamic_values, freeze_shunts, is_shunt_parameter, steady_parameters,
};

fn named(space: &ParameterSpace, x: &[f64]) -> IndexMap<String, f64> {
    space
        .names()
        .map(str::to_string)
        .zip(x.iter().copied())
        .collect()
}

/// Result of the steady-state stage.
#[derive(Debug, Clone)]
pub struct SteadyOutcome {
    pub params: WardEquivalentParams,
    /// The grid with the identified equivalent in place.
    pub network: Network,
    pub space: ParameterSpace,
    pub result: OptimizationResult,
    pub objective: f64,
    pub components: SteadyComponents,
}

/// Machine-readable stage summary written next to the stage outputs.
#[derive(Debug, Clone, Serialize)]
pub struct StageSummary<C: Serialize> {
    pub objective: f64,
    pub components: C,
    pub evaluations: usize,
    pub iterations: usize,
    pub stop_reason: crate::optimizer::StopReason,
    pub parameters: IndexMap<String, f64>,
}

impl SteadyOutcome {
    pub fn summary(&self) -> StageSummary<SteadyComponents> {
        StageSummary {
            objective: self.objective,
            components: self.components,
            evaluations: self.result.evaluations,
            iterations: self.result.history.last().map_or(0, |h| h.iter),
            stop_reason: self.result.stop_reason,
            parameters: named(&self.space, &self.result.best),
        }
    }
}

/// Searches the equivalent parameters that reproduce the reference flows
/// and short-circuit levels when the areas of `template` are replaced in
/// `grid`.
pub fn identify_steady_state(
    grid: &Network,
    refs: &SteadyReference,
    template: &WardEquivalentParams,
    stage: &StageConfig,
    objective: &ObjectiveConfig,
    seed: u64,
) -> Result<SteadyOutcome> {
    objective.validate()?;
    let mut template = complete_template(template, grid.s_base_mva());
    let space = match stage.explicit_space()? {
        Some(s) if stage.freeze_shunts => ParameterSpace::new(
            s.params()
                .iter()
                .filter(|p| !is_shunt_parameter(&p.name))
                .cloned()
                .collect(),
        )?,
        Some(s) => s,
        None => default_steady_space(&template, stage.freeze_shunts)?,
    };
    if stage.freeze_shunts {
        freeze_shunts(&mut template);
    }
    // Configuration problems surface here, before any search.
    let mid: Vec<f64> = space.from_unit(&vec![0.5; space.dim()]);
    let probe = apply_ward_equivalent(grid, &steady_parameters(&template, &space, &mid)?)?;
    steady_state_objective(&probe, refs, objective)?;

    let eval = |x: &[f64]| -> f64 {
        steady_parameters(&template, &space, x)
            .and_then(|p| apply_ward_equivalent(grid, &p))
            .and_then(|n| steady_state_objective(&n, refs, objective))
            .unwrap_or(objective.penalty)
    };
    let mut cfg = stage.optimizer.clone();
    cfg.seed = Some(cfg.seed.unwrap_or(seed));
    let result = optimize(&space, eval, &cfg)?;
    if result.best_objective >= objective.penalty {
        return Err(Error::Infeasible {
            stage: "steady-state identification".into(),
            evaluations: result.evaluations,
        });
    }
    let params = steady_parameters(&template, &space, &result.best)?;
    let network = apply_ward_equivalent(grid, &params)?;
    let components = steady_components(&network, refs, objective.c_factor)?;
    Ok(SteadyOutcome {
        params,
        network,
        space,
        objective: result.best_objective,
        result,
        components,
    })
}

/// Areas whose equivalent machine is present in `net`.
pub fn equivalent_areas(net: &Network) -> Vec<String> {
    net.areas()
        .iter()
        .map(|a| a.id.clone())
        .filter(|a| {
            let id = equivalent_machine_id(a);
            net.machines().iter().any(|m| m.id == id)
        })
        .collect()
}

/// Result of the dynamic stage.
#[derive(Debug, Clone)]
pub struct DynamicOutcome {
    pub values: IndexMap<String, f64>,
    /// The stage-1 network with the identified dynamic parameters.
    pub network: Network,
    pub space: ParameterSpace,
    pub result: OptimizationResult,
    pub objective: f64,
    pub components: DynamicComponents,
}

impl DynamicOutcome {
    pub fn summary(&self) -> StageSummary<DynamicComponents> {
        StageSummary {
            objective: self.objective,
            components: self.components,
            evaluations: self.result.evaluations,
            iterations: self.result.history.last().map_or(0, |h| h.iter),
            stop_reason: self.result.stop_reason,
            parameters: self.values.clone(),
        }
    }
}

/// Searches inertia, exciter and governor parameters of the equivalent
/// machines of `stage1` so that simulated responses match the references.
/// Nothing identified in the steady-state stage is changed.
pub fn identify_dynamic(
    stage1: &Network,
    refs: &[ScenarioReference],
    stage: &StageConfig,
    objective: &ObjectiveConfig,
    sim: &SimConfig,
    seed: u64,
) -> Result<DynamicOutcome> {
    objective.validate()?;
    let areas = equivalent_areas(stage1);
    if areas.is_empty() {
        return Err(Error::Precondition(
            "dynamic identification needs a network with stage-1 equivalent parameters applied"
                .into(),
        ));
    }
    let space = match stage.explicit_space()? {
        Some(s) => s,
        None => default_dynamic_space(&areas)?,
    };
    let names: Vec<&str> = space.names().collect();
    dynamic_values(stage1, &names)?;
    let sol = solve_power_flow(stage1, DEFAULT_TOLERANCE, DEFAULT_MAX_ITER)?;
    sol.ensure_converged()?;
    // Contract and channel problems surface here, before any search.
    dynamic_objective(stage1, &sol, refs, sim, objective)?;

    let eval = |x: &[f64]| -> f64 {
        apply_dynamic_values(stage1, names.iter().copied().zip(x.iter().copied()))
            .and_then(|n| dynamic_objective(&n, &sol, refs, sim, objective))
            .unwrap_or(objective.penalty)
    };
    let mut cfg = stage.optimizer.clone();
    cfg.seed = Some(cfg.seed.unwrap_or(seed));
    let result = optimize(&space, eval, &cfg)?;
    if result.best_objective >= objective.penalty {
        return Err(Error::Infeasible {
            stage: "dynamic identification".into(),
            evaluations: result.evaluations,
        });
    }
    let values = named(&space, &result.best);
    let network = apply_dynamic_values(stage1, values.iter().map(|(k, v)| (k.as_str(), *v)))?;
    let components = dynamic_components(&network, &sol, refs, sim, objective)?;
    Ok(DynamicOutcome {
        values,
        network,
        space,
        objective: result.best_objective,
        result,
        components,
    })
}
