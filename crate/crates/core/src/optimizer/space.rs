use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    /// Uniform in the logarithm; requires a positive lower bound.
    Log,
}

/// One named decision variable with its search box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameter {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub scale: Scale,
}

impl Parameter {
    pub fn linear(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Parameter {
            name: name.into(),
            lower,
            upper,
            scale: Scale::Linear,
        }
    }

    pub fn log(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Parameter {
            scale: Scale::Log,
            ..Parameter::linear(name, lower, upper)
        }
    }

    fn from_unit(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let x = match self.scale {
            Scale::Linear => self.lower + u * (self.upper - self.lower),
            Scale::Log => (self.lower.ln() + u * (self.upper.ln() - self.lower.ln())).exp(),
        };
        x.clamp(self.lower, self.upper)
    }

    fn to_unit(&self, x: f64) -> f64 {
        let x = x.clamp(self.lower, self.upper);
        let u = match self.scale {
            Scale::Linear => (x - self.lower) / (self.upper - self.lower),
            Scale::Log => (x.ln() - self.lower.ln()) / (self.upper.ln() - self.lower.ln()),
        };
        u.clamp(0.0, 1.0)
    }
}

/// Ordered decision variables; a candidate is one value per parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Parameter>", into = "Vec<Parameter>")]
pub struct ParameterSpace {
    params: Vec<Parameter>,
}

impl TryFrom<Vec<Parameter>> for ParameterSpace {
    type Error = Error;

    fn try_from(params: Vec<Parameter>) -> Result<Self> {
        ParameterSpace::new(params)
    }
}

impl From<ParameterSpace> for Vec<Parameter> {
    fn from(s: ParameterSpace) -> Self {
        s.params
    }
}

impl ParameterSpace {
    pub fn new(params: Vec<Parameter>) -> Result<Self> {
        let mut names = HashSet::new();
        for p in &params {
            let what = format!("parameter '{}'", p.name);
            if !names.insert(p.name.as_str()) {
                return Err(Error::invalid(what, "duplicate name"));
            }
            if !(p.lower.is_finite() && p.upper.is_finite()) {
                return Err(Error::invalid(what, "bounds must be finite"));
            }
            if p.lower >= p.upper {
                return Err(Error::invalid(
                    what,
                    format!("lower bound {} not below upper bound {}", p.lower, p.upper),
                ));
            }
            if p.scale == Scale::Log && p.lower <= 0.0 {
                return Err(Error::invalid(
                    what,
                    "log scale needs a positive lower bound",
                ));
            }
        }
        Ok(ParameterSpace { params })
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[Parameter] {
        &self.params
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.iter().map(|p| p.name.as_str())
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    /// Maps unit-cube coordinates to parameter values (clamped to the box).
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        self.params
            .iter()
            .zip(u)
            .map(|(p, u)| p.from_unit(*u))
            .collect()
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        self.params
            .iter()
            .zip(x)
            .map(|(p, x)| p.to_unit(*x))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && self
                .params
                .iter()
                .zip(x)
                .all(|(p, v)| *v >= p.lower && *v <= p.upper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverted_bounds_rejected() {
        assert!(ParameterSpace::new(vec![Parameter::linear("a", 1.0, 0.0)]).is_err());
        assert!(ParameterSpace::new(vec![Parameter::log("a", 0.0, 1.0)]).is_err());
        assert!(ParameterSpace::new(vec![
            Parameter::linear("a", 0.0, 1.0),
            Parameter::linear("a", 0.0, 2.0)
        ])
        .is_err());
    }

    #[test]
    fn unit_round_trip() {
        let s = ParameterSpace::new(vec![
            Parameter::linear("a", -2.0, 3.0),
            Parameter::log("b", 1e-3, 10.0),
        ])
        .unwrap();
        let x = vec![0.5, 0.02];
        let back = s.from_unit(&s.to_unit(&x));
        assert!((back[0] - 0.5).abs() < 1e-12 && (back[1] - 0.02).abs() < 1e-14);
        assert_eq!(s.from_unit(&[1.0, 1.0]), vec![3.0, 10.0]);
    }
}
