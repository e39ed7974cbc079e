//! Performance indices, weighted-sum composition and the two identification
//! objectives: boundary power flows plus short-circuit levels (stage 1) and
//! recorded disturbance responses (stage 2).

mod dynamic;
mod indices;
mod steady;

use serde::{Deserialize, Serialize};

use crate::dynamics::Quantity;
use crate::error::{Error, Result};

pub use dynamic::{
    channel_index, dynamic_components, dynamic_objective, scenario_residual, DynamicComponents,
    ScenarioReference,
};
pub use indices::{
    check_weights, performance_index, performance_index_from, weighted_sum, IndexKind,
    WEIGHT_SUM_TOLERANCE,
};
pub use steady::{
    steady_components, steady_reference, steady_state_objective, FlowRecord, SccRecord,
    SteadyComponents, SteadyReference,
};

/// Value returned for candidates whose evaluation fails numerically.
pub const DEFAULT_PENALTY: f64 = 1e6;

/// Floor on the reference peak-to-peak range used to normalize channel errors.
pub const NORMALIZATION_FLOOR: f64 = 1e-6;

fn one() -> f64 {
    1.0
}

/// Relative weight of each measured quantity when averaging channel indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelWeights {
    #[serde(default = "one")]
    pub vmag_pu: f64,
    /// Angles are recorded but not matched by default.
    #[serde(default)]
    pub vang_rad: f64,
    #[serde(default = "one")]
    pub freq_hz: f64,
    #[serde(default = "one")]
    pub p_mw: f64,
    #[serde(default = "one")]
    pub q_mvar: f64,
}

impl Default for ChannelWeights {
    fn default() -> Self {
        ChannelWeights {
            vmag_pu: 1.0,
            vang_rad: 0.0,
            freq_hz: 1.0,
            p_mw: 1.0,
            q_mvar: 1.0,
        }
    }
}

impl ChannelWeights {
    pub fn weight(&self, q: Quantity) -> f64 {
        match q {
            Quantity::VmagPu => self.vmag_pu,
            Quantity::VangRad => self.vang_rad,
            Quantity::FreqHz => self.freq_hz,
            Quantity::PMw => self.p_mw,
            Quantity::QMvar => self.q_mvar,
        }
    }
}

fn default_penalty() -> f64 {
    DEFAULT_PENALTY
}

/// Weights, index and failure penalty of one objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveConfig {
    /// Component weights: `[flows, short circuit]` for the steady stage,
    /// `[frequency event, voltage event]` for the dynamic stage.
    pub weights: Vec<f64>,
    #[serde(default)]
    pub index: IndexKind,
    #[serde(default)]
    pub channel_weights: ChannelWeights,
    #[serde(default = "default_penalty")]
    pub penalty: f64,
    /// Voltage factor of the short-circuit calculation.
    #[serde(default = "one")]
    pub c_factor: f64,
}

impl ObjectiveConfig {
    /// Equal weights on flows and short-circuit levels.
    pub fn steady_default() -> Self {
        ObjectiveConfig {
            weights: vec![0.5, 0.5],
            index: IndexKind::ISE,
            channel_weights: ChannelWeights::default(),
            penalty: DEFAULT_PENALTY,
            c_factor: 1.0,
        }
    }

    /// Frequency events weighted 0.8, voltage events 0.2.
    pub fn dynamic_default() -> Self {
        ObjectiveConfig {
            weights: vec![0.8, 0.2],
            ..ObjectiveConfig::steady_default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_weights(&self.weights)?;
        if self.weights.len() != 2 {
            return Err(Error::WeightConstraint(format!(
                "two weights expected, found {}",
                self.weights.len()
            )));
        }
        if !(self.penalty > 0.0 && self.penalty.is_finite()) {
            return Err(Error::invalid(
                "objective",
                "penalty must be positive and finite",
            ));
        }
        if !(self.c_factor > 0.0 && self.c_factor.is_finite()) {
            return Err(Error::invalid("objective", "c_factor must be positive"));
        }
        let cw = &self.channel_weights;
        let all = [cw.vmag_pu, cw.vang_rad, cw.freq_hz, cw.p_mw, cw.q_mvar];
        if all.iter().any(|w| !(*w >= 0.0 && w.is_finite())) || all.iter().sum::<f64>() <= 0.0 {
            return Err(Error::invalid(
                "objective",
                "channel weights must be non-negative with a positive sum",
            ));
        }
        Ok(())
    }
}
