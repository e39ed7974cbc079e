//! Integral performance indices and weighted-sum scalarization.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the sum of weights.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum IndexKind {
    /// Integral of the squared error.
    #[default]
    #[serde(alias = "ise")]
    ISE,
    /// Integral of time times the squared error.
    #[serde(alias = "itse")]
    ITSE,
    /// Integral of the absolute error.
    #[serde(alias = "iae")]
    IAE,
    /// Integral of time times the absolute error.
    #[serde(alias = "itae")]
    ITAE,
}

impl IndexKind {
    pub const ALL: [IndexKind; 4] = [
        IndexKind::ISE,
        IndexKind::ITSE,
        IndexKind::IAE,
        IndexKind::ITAE,
    ];

    /// Integrand at time `t` for error `e`.
    pub fn integrand(self, t: f64, e: f64) -> f64 {
        match self {
            IndexKind::ISE => e * e,
            IndexKind::ITSE => t * e * e,
            IndexKind::IAE => e.abs(),
            IndexKind::ITAE => t * e.abs(),
        }
    }
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            IndexKind::ISE => "ISE",
            IndexKind::ITSE => "ITSE",
            IndexKind::IAE => "IAE",
            IndexKind::ITAE => "ITAE",
        };
        f.write_str(s)
    }
}

impl FromStr for IndexKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IndexKind::ALL
            .into_iter()
            .find(|k| k.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownElement(format!("index kind '{s}'")))
    }
}

/// Index of an error signal sampled every `dt` from `t = 0`.
pub fn performance_index(kind: IndexKind, e: &[f64], dt: f64) -> Result<f64> {
    performance_index_from(kind, e, dt, 0.0)
}

/// Index of an error signal whose first sample is at time `t0`; the time
/// weight of ITSE/ITAE is the absolute time. Trapezoidal quadrature.
pub fn performance_index_from(kind: IndexKind, e: &[f64], dt: f64, t0: f64) -> Result<f64> {
    if !(dt > 0.0 && dt.is_finite()) || !t0.is_finite() {
        return Err(Error::invalid(
            "performance index",
            "dt must be positive and t0 finite",
        ));
    }
    if let Some(i) = e.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(
            "performance index",
            format!("non-finite error sample at index {i}"),
        ));
    }
    let g = |i: usize| kind.integrand(t0 + i as f64 * dt, e[i]);
    let mut acc = 0.0;
    for i in 1..e.len() {
        acc += 0.5 * dt * (g(i - 1) + g(i));
    }
    Ok(acc)
}

/// Checks that every weight lies in (0, 1) and that they sum to one.
pub fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::WeightConstraint("no weights given".into()));
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && **w < 1.0)) {
        return Err(Error::WeightConstraint(format!(
            "weight {w} outside (0, 1)"
        )));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(Error::WeightConstraint(format!("weights sum to {sum}")));
    }
    Ok(())
}

/// `Σ wᵢ·fᵢ` for weights satisfying [`check_weights`].
pub fn weighted_sum(values: &[f64], weights: &[f64]) -> Result<f64> {
    if values.len() != weights.len() {
        return Err(Error::WeightConstraint(format!(
            "{} values but {} weights",
            values.len(),
            weights.len()
        )));
    }
    check_weights(weights)?;
    Ok(values.iter().zip(weights).map(|(v, w)| v * w).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_error_gives_zero() {
        for k in IndexKind::ALL {
            assert_eq!(performance_index(k, &[0.0; 50], 0.1).unwrap(), 0.0);
        }
    }

    #[test]
    fn nan_rejected() {
        assert!(performance_index(IndexKind::IAE, &[0.0, f64::NAN], 0.1).is_err());
    }

    #[test]
    fn weight_checks() {
        assert_eq!(weighted_sum(&[2.0, 4.0], &[0.5, 0.5]).unwrap(), 3.0);
        assert!(matches!(
            weighted_sum(&[1.0, 2.0], &[0.7, 0.2]),
            Err(Error::WeightConstraint(_))
        ));
        assert!(weighted_sum(&[1.0], &[1.0]).is_err());
        assert!(weighted_sum(&[1.0, 2.0], &[0.5]).is_err());
    }

    #[test]
    fn parse_kind() {
        assert_eq!("itae".parse::<IndexKind>().unwrap(), IndexKind::ITAE);
        assert!("mse".parse::<IndexKind>().is_err());
    }
}
