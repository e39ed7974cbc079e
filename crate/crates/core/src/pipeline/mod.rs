//! Two-stage identification: reference generation, steady-state stage,
//! dynamic stage and comparison report, all persisted in one run directory.
//!
//! Run directory layout:
//!
//! ```text
//! run.json                      simulation and objective settings of the run
//! references/steady.json        reference flows and short-circuit levels
//! references/scenarios.json     disturbance scenarios
//! references/<scenario>.csv     reference records
//! stage1/params.json            identified equivalent parameters
//! stage1/network.json           grid with the equivalent in place
//! stage1/history.csv            optimizer convergence history
//! stage1/summary.json
//! stage2/...                    same for the dynamic stage (params.json
//!                               holds the named dynamic values)
//! report/                       flow, short-circuit, parameter, objective
//!                               tables and per-channel overlay curves
//! ```

mod config;
mod params;
mod references;
mod report;
mod stages;

use std::fs;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::dynamics::SimConfig;
use crate::error::{Error, Result};
use crate::grid::Network;
use crate::grid::WardEquivalentParams;
use crate::objectives::ObjectiveConfig;

pub use config::{PipelineConfig, ReferenceSource, StageConfig};
pub use params::{
    apply_dynamic_values, complete_template, default_dynamic_space, default_steady_space,
    dynamic_values, get_steady_parameter, set_steady_parameter, steady_parameters,
};
pub use references::{
    boundary_elements, default_monitors, generate_references, read_references, write_references,
    References,
};
pub use report::{
    build_report, flow_label, flow_row, format_rounded, scc_row, write_report,
    IdentificationReport, NadirComparison, Overlay, FLOW_HEADER, SCC_HEADER,
};
pub use stages::{
    equivalent_areas, identify_dynamic, identify_steady_state, DynamicOutcome, StageSummary,
    SteadyOutcome,
};

use references::{create_dir, read_json, write_json};

/// File and directory names inside a run directory.
pub mod layout {
    pub const MANIFEST: &str = "run.json";
    pub const REFERENCES: &str = "references";
    pub const STEADY_REFERENCE: &str = "steady.json";
    pub const SCENARIOS: &str = "scenarios.json";
    pub const STAGE1: &str = "stage1";
    pub const STAGE2: &str = "stage2";
    pub const PARAMS: &str = "params.json";
    pub const NETWORK: &str = "network.json";
    pub const HISTORY: &str = "history.csv";
    pub const SUMMARY: &str = "summary.json";
    pub const REPORT: &str = "report";
    pub const FLOW_TABLE: &str = "flows.csv";
    pub const SCC_TABLE: &str = "short_circuit.csv";
    pub const PARAMETER_TABLE: &str = "parameters.csv";
    pub const OBJECTIVE_TABLE: &str = "objectives.csv";
    pub const NADIR_TABLE: &str = "nadir.csv";
    pub const OVERLAYS: &str = "overlays";
}

/// Settings the report needs to re-evaluate a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub simulation: SimConfig,
    pub steady_objective: ObjectiveConfig,
    pub dynamic_objective: ObjectiveConfig,
}

impl RunManifest {
    fn of(cfg: &PipelineConfig) -> Self {
        RunManifest {
            simulation: cfg.simulation.clone(),
            steady_objective: cfg.steady_objective(),
            dynamic_objective: cfg.dynamic_objective(),
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn replaced_areas(cfg: &PipelineConfig) -> Vec<&str> {
    cfg.equivalent
        .areas
        .iter()
        .map(|a| a.area.as_str())
        .collect()
}

/// Generates and persists the references of `cfg`.
pub fn prepare_references(cfg: &PipelineConfig, grid: &Network) -> Result<References> {
    let scenarios = cfg.load_scenarios()?;
    let source = cfg.reference_network(grid)?;
    let elements = boundary_elements(grid, &replaced_areas(cfg));
    let monitors = match &cfg.monitors {
        Some(m) => m.clone(),
        None => default_monitors(grid, &elements),
    };
    let refs = generate_references(
        &source,
        &elements,
        &scenarios,
        &monitors,
        &cfg.simulation,
        cfg.steady_objective().c_factor,
    )?;
    create_dir(&cfg.run_dir)?;
    write_json(&cfg.run_dir.join(layout::MANIFEST), &RunManifest::of(cfg))?;
    write_references(&cfg.run_dir, &refs)?;
    Ok(refs)
}

/// Reference generation followed by the steady-state stage.
pub fn run_steady_stage(cfg: &PipelineConfig) -> Result<SteadyOutcome> {
    let grid = cfg.load_grid()?;
    let refs = prepare_references(cfg, &grid)?;
    let out = identify_steady_state(
        &grid,
        &refs.steady,
        &cfg.equivalent,
        &cfg.steady,
        &cfg.steady_objective(),
        cfg.seed,
    )?;
    let dir = cfg.run_dir.join(layout::STAGE1);
    create_dir(&dir)?;
    write_json(&dir.join(layout::PARAMS), &out.params)?;
    write_text(&dir.join(layout::NETWORK), &(out.network.to_json() + "\n"))?;
    write_text(&dir.join(layout::HISTORY), &out.result.history_csv())?;
    write_json(&dir.join(layout::SUMMARY), &out.summary())?;
    Ok(out)
}

/// Network with the stage-1 equivalent of a run, or a precondition error
/// when the steady-state stage has not been run.
pub fn load_stage1(run_dir: &Path) -> Result<Network> {
    let path = run_dir.join(layout::STAGE1).join(layout::NETWORK);
    if !path.exists() {
        return Err(Error::Precondition(format!(
            "stage-1 parameters not found ({}); run the steady-state stage first",
            path.display()
        )));
    }
    read_json(&path)
}

/// The dynamic stage on top of the persisted stage-1 result.
pub fn run_dynamic_stage(cfg: &PipelineConfig) -> Result<DynamicOutcome> {
    let stage1 = load_stage1(&cfg.run_dir)?;
    let refs_dir = cfg.run_dir.join(layout::REFERENCES);
    let refs = if refs_dir.join(layout::STEADY_REFERENCE).exists() {
        read_references(&cfg.run_dir)?
    } else {
        prepare_references(cfg, &cfg.load_grid()?)?
    };
    write_json(&cfg.run_dir.join(layout::MANIFEST), &RunManifest::of(cfg))?;
    let out = identify_dynamic(
        &stage1,
        &refs.scenarios,
        &cfg.dynamic,
        &cfg.dynamic_objective(),
        &cfg.simulation,
        cfg.seed,
    )?;
    let dir = cfg.run_dir.join(layout::STAGE2);
    create_dir(&dir)?;
    write_json(&dir.join(layout::PARAMS), &out.values)?;
    write_text(&dir.join(layout::NETWORK), &(out.network.to_json() + "\n"))?;
    write_text(&dir.join(layout::HISTORY), &out.result.history_csv())?;
    write_json(&dir.join(layout::SUMMARY), &out.summary())?;
    Ok(out)
}

fn parameter_rows(run_dir: &Path) -> Result<Vec<(String, String, f64)>> {
    let mut rows = Vec::new();
    for (stage, dir) in [("steady", layout::STAGE1), ("dynamic", layout::STAGE2)] {
        let path = run_dir.join(dir).join(layout::SUMMARY);
        if !path.exists() {
            continue;
        }
        #[derive(Deserialize)]
        struct Params {
            parameters: IndexMap<String, f64>,
        }
        let p: Params = read_json(&path)?;
        rows.extend(
            p.parameters
                .into_iter()
                .map(|(n, v)| (stage.to_string(), n, v)),
        );
    }
    Ok(rows)
}

/// Builds and writes the report of a run directory. Works after the
/// steady-state stage alone (partial report) or after both stages.
pub fn run_report(run_dir: &Path) -> Result<IdentificationReport> {
    let manifest: RunManifest = read_json(&run_dir.join(layout::MANIFEST))?;
    let refs = read_references(run_dir)?;
    let stage1 = load_stage1(run_dir)?;
    let stage2_path = run_dir.join(layout::STAGE2).join(layout::NETWORK);
    let stage2: Option<Network> = if stage2_path.exists() {
        Some(read_json(&stage2_path)?)
    } else {
        None
    };
    let report = build_report(
        &refs,
        &stage1,
        stage2.as_ref(),
        parameter_rows(run_dir)?,
        &manifest.simulation,
        &manifest.steady_objective,
        &manifest.dynamic_objective,
    )?;
    write_report(&run_dir.join(layout::REPORT), &report)?;
    Ok(report)
}

/// Both stages and the report.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<IdentificationReport> {
    run_steady_stage(cfg)?;
    run_dynamic_stage(cfg)?;
    run_report(&cfg.run_dir)
}

/// Stage-1 equivalent parameters persisted in a run directory.
pub fn load_stage1_params(run_dir: &Path) -> Result<WardEquivalentParams> {
    read_json(&run_dir.join(layout::STAGE1).join(layout::PARAMS))
}
