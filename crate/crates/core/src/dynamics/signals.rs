use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on sample spacing, seconds.
pub const DT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    VmagPu,
    VangRad,
    FreqHz,
    PMw,
    QMvar,
}

impl Quantity {
    pub const ALL: [Quantity; 5] = [
        Quantity::VmagPu,
        Quantity::VangRad,
        Quantity::FreqHz,
        Quantity::PMw,
        Quantity::QMvar,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Quantity::VmagPu => "vmag_pu",
            Quantity::VangRad => "vang_rad",
            Quantity::FreqHz => "freq_hz",
            Quantity::PMw => "p_mw",
            Quantity::QMvar => "q_mvar",
        }
    }

    /// Flow quantities are measured on a branch end; the rest at a bus.
    pub fn is_flow(self) -> bool {
        matches!(self, Quantity::PMw | Quantity::QMvar)
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.as_str() == s)
            .ok_or_else(|| Error::UnknownElement(format!("quantity '{s}'")))
    }
}

/// A monitored signal: `<location>:<quantity>`.
///
/// Bus quantities use a bus id as location. Flow quantities use
/// `<element>@<bus>`, where the element is a branch id (flow into that
/// branch at `bus`) or an area id (total flow from `bus` into the area).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChannelId {
    pub location: String,
    pub quantity: Quantity,
}

impl ChannelId {
    pub fn new(location: impl Into<String>, quantity: Quantity) -> Self {
        ChannelId {
            location: location.into(),
            quantity,
        }
    }

    /// For flow channels, the `(element, bus)` pair.
    pub fn flow_parts(&self) -> Option<(&str, &str)> {
        self.location.split_once('@')
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.location, self.quantity.as_str())
    }
}

impl FromStr for ChannelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (loc, qty) = s
            .rsplit_once(':')
            .ok_or_else(|| Error::UnknownElement(format!("channel '{s}' (expected loc:qty)")))?;
        if loc.is_empty() || loc.contains(',') {
            return Err(Error::UnknownElement(format!("channel '{s}'")));
        }
        let quantity: Quantity = qty.parse()?;
        if quantity.is_flow() != loc.contains('@') {
            return Err(Error::UnknownElement(format!(
                "channel '{s}': flow quantities need an <element>@<bus> location, bus quantities a bus id"
            )));
        }
        Ok(ChannelId::new(loc, quantity))
    }
}

impl Serialize for ChannelId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ChannelId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Time-aligned multi-channel record on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSet {
    dt: f64,
    t: Vec<f64>,
    channels: IndexMap<ChannelId, Vec<f64>>,
}

impl SignalSet {
    /// Builds a set, checking equal lengths and uniform spacing `dt`.
    pub fn new(dt: f64, t: Vec<f64>, channels: IndexMap<ChannelId, Vec<f64>>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("signal set", "dt must be positive"));
        }
        if t.is_empty() {
            return Err(Error::invalid("signal set", "no samples"));
        }
        for w in t.windows(2) {
            if ((w[1] - w[0]) - dt).abs() > DT_TOLERANCE {
                return Err(Error::invalid(
                    "signal set",
                    format!("non-uniform spacing near t = {}", w[0]),
                ));
            }
        }
        for (id, v) in &channels {
            if v.len() != t.len() {
                return Err(Error::invalid(
                    format!("channel '{id}'"),
                    format!("{} samples for {} time points", v.len(), t.len()),
                ));
            }
        }
        Ok(SignalSet { dt, t, channels })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn channels(&self) -> &IndexMap<ChannelId, Vec<f64>> {
        &self.channels
    }

    pub fn channel(&self, id: &ChannelId) -> Option<&[f64]> {
        self.channels.get(id).map(Vec::as_slice)
    }

    pub fn start(&self) -> f64 {
        self.t[0]
    }

    pub fn end(&self) -> f64 {
        *self.t.last().unwrap()
    }

    /// Keeps only the listed channels, in the given order.
    pub fn select(&self, ids: &[ChannelId]) -> Result<SignalSet> {
        let mut channels = IndexMap::new();
        for id in ids {
            let v = self
                .channels
                .get(id)
                .ok_or_else(|| Error::MissingReference(format!("channel '{id}'")))?;
            channels.insert(id.clone(), v.clone());
        }
        Ok(SignalSet {
            dt: self.dt,
            t: self.t.clone(),
            channels,
        })
    }
}
