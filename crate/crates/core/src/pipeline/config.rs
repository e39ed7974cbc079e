//! The per-run JSON configuration.

use std::fs;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::dynamics::{load_event_script, ChannelId, Scenario, SimConfig};
use crate::error::{Error, Result};
use crate::grid::WardEquivalentParams;
use crate::grid::{load_network, Network};
use crate::objectives::ObjectiveConfig;
use crate::optimizer::{OptimizerConfig, Parameter, ParameterSpace};

/// Settings of one identification stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    /// Decision variables; a generic default box is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<Vec<Parameter>>,
    /// Defaults to weights 0.5/0.5 (steady) or 0.8/0.2 (dynamic), ISE.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<ObjectiveConfig>,
    pub optimizer: OptimizerConfig,
    /// Steady stage only: keep the four shunt terms of every series
    /// impedance at zero instead of identifying them.
    #[serde(default)]
    pub freeze_shunts: bool,
}

impl StageConfig {
    pub fn explicit_space(&self) -> Result<Option<ParameterSpace>> {
        self.space.clone().map(ParameterSpace::new).transpose()
    }
}

/// Where the reference measurements come from. By default the full grid is
/// simulated; a known equivalent can be given instead for round-trip runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSource {
    /// Equivalent parameters applied to the grid to produce the references.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equivalent: Option<PathBuf>,
    /// Dynamic parameter values (`<area>.h`, `<area>.avr.<f>`,
    /// `<area>.gov.<f>`) of that equivalent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamic: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Output directory (created when missing).
    pub run_dir: PathBuf,
    /// Full network document.
    pub grid: PathBuf,
    /// Event script with one frequency and one voltage scenario.
    pub events: PathBuf,
    /// Areas to replace, their boundary buses and starting values.
    pub equivalent: WardEquivalentParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceSource>,
    /// Recorded channels; defaults to the boundary measurement set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monitors: Option<Vec<ChannelId>>,
    #[serde(default)]
    pub simulation: SimConfig,
    pub steady: StageConfig,
    pub dynamic: StageConfig,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Json {
            context: "pipeline configuration".into(),
            source: e,
        })
    }

    /// Reads a configuration file; relative paths inside it are resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_json(&read_text(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.run_dir);
        fix(&mut self.grid);
        fix(&mut self.events);
        if let Some(r) = self.reference.as_mut() {
            r.equivalent.as_mut().map(fix);
            r.dynamic.as_mut().map(fix);
        }
    }

    /// Checks everything that can be checked without loading other files.
    pub fn validate(&self) -> Result<()> {
        self.simulation.validate()?;
        for (name, stage) in [("steady", &self.steady), ("dynamic", &self.dynamic)] {
            stage.optimizer.validate().map_err(|e| match e {
                Error::Invalid { element, message } => {
                    Error::invalid(format!("{name} stage {element}"), message)
                }
                e => e,
            })?;
            stage.explicit_space()?;
            if let Some(o) = &stage.objective {
                o.validate()?;
            }
        }
        if self.dynamic.freeze_shunts {
            return Err(Error::invalid(
                "dynamic stage",
                "freeze_shunts applies to the steady stage only",
            ));
        }
        Ok(())
    }

    pub fn steady_objective(&self) -> ObjectiveConfig {
        self.steady
            .objective
            .clone()
            .unwrap_or_else(ObjectiveConfig::steady_default)
    }

    pub fn dynamic_objective(&self) -> ObjectiveConfig {
        self.dynamic
            .objective
            .clone()
            .unwrap_or_else(ObjectiveConfig::dynamic_default)
    }

    pub fn load_grid(&self) -> Result<Network> {
        load_network(&read_text(&self.grid)?)
    }

    pub fn load_scenarios(&self) -> Result<Vec<Scenario>> {
        load_event_script(&read_text(&self.events)?)
    }

    /// Network that produces the reference measurements.
    pub fn reference_network(&self, grid: &Network) -> Result<Network> {
        let src = self.reference.clone().unwrap_or_default();
        let mut net = match &src.equivalent {
            Some(p) => {
                let eq = WardEquivalentParams::from_json(&read_text(p)?)?;
                crate::grid::apply_ward_equivalent(grid, &eq)?
            }
            None => grid.clone(),
        };
        if let Some(p) = &src.dynamic {
            if src.equivalent.is_none() {
                return Err(Error::invalid(
                    "reference",
                    "dynamic values need a reference equivalent",
                ));
            }
            let values: IndexMap<String, f64> =
                serde_json::from_str(&read_text(p)?).map_err(|e| Error::Json {
                    context: format!("dynamic values {}", p.display()),
                    source: e,
                })?;
            net = super::params::apply_dynamic_values(
                &net,
                values.iter().map(|(k, v)| (k.as_str(), *v)),
            )?;
        }
        Ok(net)
    }
}
