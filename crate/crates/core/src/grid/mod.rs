//! Network model in system per-unit, JSON ingestion and the generalized-Ward
//! equivalent transformation.

mod ward;

use std::collections::{HashMap, HashSet};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{AvrAc5aParams, HydroGovParams};
use crate::error::{Error, Result};

pub use ward::{
    apply_ward_equivalent, equivalent_bus_id, equivalent_load_id, equivalent_machine_id,
    series_branch_id, AreaEquivalent, WardEquivalentParams, COMMON_BRANCH_PREFIX,
    EQUIVALENT_DAMPING_PU, EQUIVALENT_XD_PU,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: String,
    pub base_kv: f64,
    pub kind: BusKind,
    /// Voltage setpoint in pu, required on slack and PV buses.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_set: Option<f64>,
    #[serde(default)]
    pub is_boundary: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area: Option<String>,
}

/// π-model branch impedance expressed on its own MVA base.
///
/// Zero-sequence values are carried through but not used by any computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Impedance {
    pub s_base_mva: f64,
    pub r: f64,
    pub x: f64,
    #[serde(default)]
    pub r0: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub g_i: f64,
    #[serde(default)]
    pub b_i: f64,
    #[serde(default)]
    pub g_j: f64,
    #[serde(default)]
    pub b_j: f64,
}

impl Impedance {
    pub fn series(s_base_mva: f64, r: f64, x: f64) -> Self {
        Impedance {
            s_base_mva,
            r,
            x,
            r0: 0.0,
            x0: 0.0,
            g_i: 0.0,
            b_i: 0.0,
            g_j: 0.0,
            b_j: 0.0,
        }
    }

    /// Re-expresses the same physical element on another MVA base.
    /// Impedances scale with the base, admittances inversely.
    pub fn rebase(&self, to_mva: f64) -> Impedance {
        let k = to_mva / self.s_base_mva;
        Impedance {
            s_base_mva: to_mva,
            r: self.r * k,
            x: self.x * k,
            r0: self.r0 * k,
            x0: self.x0 * k,
            g_i: self.g_i / k,
            b_i: self.b_i / k,
            g_j: self.g_j / k,
            b_j: self.b_j / k,
        }
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.r, self.x)
    }

    pub fn shunt_from(&self) -> Complex64 {
        Complex64::new(self.g_i, self.b_i)
    }

    pub fn shunt_to(&self) -> Complex64 {
        Complex64::new(self.g_j, self.b_j)
    }

    fn all_finite(&self) -> bool {
        [
            self.s_base_mva,
            self.r,
            self.x,
            self.r0,
            self.x0,
            self.g_i,
            self.b_i,
            self.g_j,
            self.b_j,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchStatus {
    #[default]
    In,
    Out,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub id: String,
    pub from: String,
    pub to: String,
    pub impedance: Impedance,
    #[serde(default)]
    pub status: BranchStatus,
}

impl Branch {
    pub fn in_service(&self) -> bool {
        self.status == BranchStatus::In
    }

    /// The bus at the other end, if `bus` is one of the terminals.
    pub fn other_end(&self, bus: &str) -> Option<&str> {
        if self.from == bus {
            Some(&self.to)
        } else if self.to == bus {
            Some(&self.from)
        } else {
            None
        }
    }
}

fn default_td0_p() -> f64 {
    5.0
}

/// Synchronous machine, one-axis model. Reactances are on `s_nom_mva`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Machine {
    pub id: String,
    pub bus: String,
    pub s_nom_mva: f64,
    /// Inertia constant in seconds on `s_nom_mva`.
    pub h: f64,
    /// Synchronous d-axis reactance; defaults to `xd_p` (no armature reaction).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xd: Option<f64>,
    pub xd_p: f64,
    #[serde(default = "default_td0_p")]
    pub td0_p: f64,
    #[serde(default)]
    pub d_damp: f64,
    /// Active dispatch (PV and PQ buses); the slack machine ignores it.
    #[serde(default)]
    pub p_mw: f64,
    /// Reactive output used only when the machine sits on a PQ bus.
    #[serde(default)]
    pub q_mvar: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_min_mvar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_max_mvar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avr: Option<AvrAc5aParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gov: Option<HydroGovParams>,
}

impl Machine {
    pub fn xd(&self) -> f64 {
        self.xd.unwrap_or(self.xd_p)
    }
}

/// Constant-power load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Load {
    pub id: String,
    pub bus: String,
    pub p_mw: f64,
    pub q_mvar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Area {
    pub id: String,
    /// External areas are the ones a Ward equivalent replaces.
    #[serde(default)]
    pub external: bool,
}

/// The JSON grid description as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDocument {
    pub s_base_mva: f64,
    pub f_nominal_hz: f64,
    pub buses: Vec<Bus>,
    #[serde(default)]
    pub branches: Vec<Branch>,
    #[serde(default)]
    pub machines: Vec<Machine>,
    #[serde(default)]
    pub loads: Vec<Load>,
    #[serde(default)]
    pub areas: Vec<Area>,
}

/// A validated network with every branch impedance on the system base.
///
/// Immutable once built; transformations return new networks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Network {
    #[serde(flatten)]
    doc: GridDocument,
    #[serde(skip)]
    bus_index: HashMap<String, usize>,
}

/// Parses and validates a JSON grid description.
pub fn load_network(text: &str) -> Result<Network> {
    let doc: GridDocument = serde_json::from_str(text).map_err(|e| Error::Schema {
        context: "grid document".into(),
        message: e.to_string(),
    })?;
    Network::new(doc)
}

impl Network {
    pub fn new(mut doc: GridDocument) -> Result<Network> {
        if !(doc.s_base_mva > 0.0 && doc.s_base_mva.is_finite()) {
            return Err(Error::invalid("network", "s_base_mva must be positive"));
        }
        if !(doc.f_nominal_hz > 0.0 && doc.f_nominal_hz.is_finite()) {
            return Err(Error::invalid("network", "f_nominal_hz must be positive"));
        }

        let area_ids: HashSet<&str> = doc.areas.iter().map(|a| a.id.as_str()).collect();
        if area_ids.len() != doc.areas.len() {
            return Err(Error::invalid("areas", "duplicate area id"));
        }

        let mut bus_index = HashMap::with_capacity(doc.buses.len());
        let mut slack_count = 0;
        for (i, bus) in doc.buses.iter().enumerate() {
            if bus_index.insert(bus.id.clone(), i).is_some() {
                return Err(Error::invalid(format!("bus '{}'", bus.id), "duplicate id"));
            }
            if !(bus.base_kv > 0.0 && bus.base_kv.is_finite()) {
                return Err(Error::invalid(
                    format!("bus '{}'", bus.id),
                    "base_kv must be positive",
                ));
            }
            match bus.kind {
                BusKind::Slack | BusKind::Pv => match bus.v_set {
                    Some(v) if v > 0.5 && v < 1.5 => {}
                    Some(v) => {
                        return Err(Error::invalid(
                            format!("bus '{}'", bus.id),
                            format!("v_set {v} outside (0.5, 1.5)"),
                        ))
                    }
                    None => {
                        return Err(Error::invalid(
                            format!("bus '{}'", bus.id),
                            "v_set required on slack and PV buses",
                        ))
                    }
                },
                BusKind::Pq => {}
            }
            if bus.kind == BusKind::Slack {
                slack_count += 1;
            }
            if let Some(area) = &bus.area {
                if !area_ids.contains(area.as_str()) {
                    return Err(Error::invalid(
                        format!("bus '{}'", bus.id),
                        format!("undefined area '{area}'"),
                    ));
                }
            }
        }
        if slack_count != 1 {
            return Err(Error::SlackCount { count: slack_count });
        }

        let check_bus = |kind: &'static str, element: &str, bus: &str| -> Result<()> {
            if bus_index.contains_key(bus) {
                Ok(())
            } else {
                Err(Error::DanglingReference {
                    kind,
                    element: element.to_string(),
                    bus: bus.to_string(),
                })
            }
        };

        let s_base = doc.s_base_mva;
        let mut seen = HashSet::new();
        for br in doc.branches.iter_mut() {
            if !seen.insert(br.id.clone()) {
                return Err(Error::invalid(
                    format!("branch '{}'", br.id),
                    "duplicate id",
                ));
            }
            check_bus("branch", &br.id, &br.from)?;
            check_bus("branch", &br.id, &br.to)?;
            if br.from == br.to {
                return Err(Error::invalid(
                    format!("branch '{}'", br.id),
                    "both ends on the same bus",
                ));
            }
            if !br.impedance.all_finite() || br.impedance.s_base_mva <= 0.0 {
                return Err(Error::invalid(
                    format!("branch '{}'", br.id),
                    "impedance values must be finite with positive s_base_mva",
                ));
            }
            if br.impedance.r == 0.0 && br.impedance.x == 0.0 {
                return Err(Error::ZeroImpedance(br.id.clone()));
            }
            if br.impedance.s_base_mva != s_base {
                br.impedance = br.impedance.rebase(s_base);
            }
        }

        seen.clear();
        let mut machine_buses = HashSet::new();
        for m in &doc.machines {
            let what = format!("machine '{}'", m.id);
            if !seen.insert(m.id.clone()) {
                return Err(Error::invalid(what, "duplicate id"));
            }
            check_bus("machine", &m.id, &m.bus)?;
            if !machine_buses.insert(m.bus.clone()) {
                return Err(Error::invalid(
                    what,
                    "only one machine per bus is supported",
                ));
            }
            if !(m.s_nom_mva > 0.0 && m.s_nom_mva.is_finite()) {
                return Err(Error::invalid(what, "s_nom_mva must be positive"));
            }
            if !(m.h > 0.0 && m.h.is_finite()) {
                return Err(Error::invalid(what, "inertia h must be positive"));
            }
            if !(m.xd_p > 0.0 && m.xd_p.is_finite()) {
                return Err(Error::invalid(what, "xd_p must be positive"));
            }
            if m.xd() < m.xd_p {
                return Err(Error::invalid(what, "xd must not be below xd_p"));
            }
            if !(m.td0_p > 0.0) {
                return Err(Error::invalid(what, "td0_p must be positive"));
            }
            if !m.p_mw.is_finite() || !m.q_mvar.is_finite() || !m.d_damp.is_finite() {
                return Err(Error::invalid(what, "non-finite dispatch or damping"));
            }
            if let Some(avr) = &m.avr {
                avr.validate(&m.id)?;
            }
            if let Some(gov) = &m.gov {
                gov.validate(&m.id)?;
            }
        }

        seen.clear();
        for l in &doc.loads {
            if !seen.insert(l.id.clone()) {
                return Err(Error::invalid(format!("load '{}'", l.id), "duplicate id"));
            }
            check_bus("load", &l.id, &l.bus)?;
            if !l.p_mw.is_finite() || !l.q_mvar.is_finite() {
                return Err(Error::invalid(
                    format!("load '{}'", l.id),
                    "non-finite power",
                ));
            }
        }

        Ok(Network { doc, bus_index })
    }

    pub fn s_base_mva(&self) -> f64 {
        self.doc.s_base_mva
    }

    pub fn f_nominal_hz(&self) -> f64 {
        self.doc.f_nominal_hz
    }

    pub fn buses(&self) -> &[Bus] {
        &self.doc.buses
    }

    pub fn branches(&self) -> &[Branch] {
        &self.doc.branches
    }

    pub fn machines(&self) -> &[Machine] {
        &self.doc.machines
    }

    pub fn loads(&self) -> &[Load] {
        &self.doc.loads
    }

    pub fn areas(&self) -> &[Area] {
        &self.doc.areas
    }

    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.bus_index.get(id).copied()
    }

    pub fn bus(&self, id: &str) -> Option<&Bus> {
        self.bus_index(id).map(|i| &self.doc.buses[i])
    }

    pub fn branch(&self, id: &str) -> Option<&Branch> {
        self.doc.branches.iter().find(|b| b.id == id)
    }

    pub fn area(&self, id: &str) -> Option<&Area> {
        self.doc.areas.iter().find(|a| a.id == id)
    }

    pub fn boundary_buses(&self) -> impl Iterator<Item = &Bus> {
        self.doc.buses.iter().filter(|b| b.is_boundary)
    }

    pub fn slack_index(&self) -> usize {
        self.doc
            .buses
            .iter()
            .position(|b| b.kind == BusKind::Slack)
            .expect("validated network has a slack bus")
    }

    /// A copy of the underlying document (impedances on the system base).
    pub fn to_document(&self) -> GridDocument {
        self.doc.clone()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.doc).expect("grid document serializes")
    }

    /// Returns a copy with `f` applied to the document, re-validated.
    pub fn modified(&self, f: impl FnOnce(&mut GridDocument)) -> Result<Network> {
        let mut doc = self.doc.clone();
        f(&mut doc);
        Network::new(doc)
    }
}

/// Branches making up the flow element `element` seen from `bus`, each with
/// a flag telling whether `bus` is its from-end. `element` is a branch id
/// incident to `bus`, or an area id meaning every branch from `bus` into it.
pub fn flow_branches(net: &Network, element: &str, bus: &str) -> Result<Vec<(usize, bool)>> {
    if let Some(pos) = net.branches().iter().position(|b| b.id == element) {
        let br = &net.branches()[pos];
        return match br.other_end(bus) {
            Some(_) => Ok(vec![(pos, br.from == bus)]),
            None => Err(Error::invalid(
                format!("branch '{element}'"),
                format!("not incident to bus '{bus}'"),
            )),
        };
    }
    if net.area(element).is_some() {
        let list: Vec<(usize, bool)> = net
            .branches()
            .iter()
            .enumerate()
            .filter_map(|(i, br)| {
                let far = br.other_end(bus)?;
                let in_area = net.bus(far)?.area.as_deref() == Some(element);
                in_area.then_some((i, br.from == bus))
            })
            .collect();
        if list.is_empty() {
            return Err(Error::invalid(
                format!("area '{element}'"),
                format!("no branch from bus '{bus}' into the area"),
            ));
        }
        return Ok(list);
    }
    Err(Error::UnknownElement(format!("flow element '{element}'")))
}

impl<'de> Deserialize<'de> for Network {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = GridDocument::deserialize(d)?;
        Network::new(doc).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_BUS: &str = r#"{
        "s_base_mva": 100, "f_nominal_hz": 50,
        "buses": [
            {"id": "B1", "base_kv": 230, "kind": "slack", "v_set": 1.0},
            {"id": "B2", "base_kv": 230, "kind": "pq"}
        ],
        "branches": [
            {"id": "L12", "from": "B1", "to": "B2",
             "impedance": {"s_base_mva": 100, "r": 0.0, "x": 0.1}}
        ],
        "loads": [{"id": "LD2", "bus": "B2", "p_mw": 50, "q_mvar": 0}]
    }"#;

    #[test]
    fn minimal_document_loads() {
        let net = load_network(TWO_BUS).unwrap();
        assert_eq!(net.buses().len(), 2);
        assert_eq!(net.branches().len(), 1);
        assert_eq!(net.slack_index(), 0);
    }

    #[test]
    fn dangling_bus_reference_names_the_bus() {
        let text = TWO_BUS.replace(r#""to": "B2""#, r#""to": "B9""#);
        let err = load_network(&text).unwrap_err();
        assert!(matches!(err, Error::DanglingReference { ref bus, .. } if bus == "B9"));
        assert!(err.to_string().contains("B9"));
    }

    #[test]
    fn branch_rebased_to_system_base() {
        let text = TWO_BUS.replace(
            r#""impedance": {"s_base_mva": 100, "r": 0.0, "x": 0.1}"#,
            r#""impedance": {"s_base_mva": 1000, "r": 0.8268194, "x": 3.315204}"#,
        );
        let net = load_network(&text).unwrap();
        let z = net.branches()[0].impedance;
        assert_eq!(z.s_base_mva, 100.0);
        assert!((z.x - 0.3315204).abs() < 1e-12);
        assert!((z.r - 0.08268194).abs() < 1e-12);
    }

    #[test]
    fn zero_impedance_rejected() {
        let text = TWO_BUS.replace(r#""x": 0.1"#, r#""x": 0.0"#);
        assert!(matches!(
            load_network(&text).unwrap_err(),
            Error::ZeroImpedance(id) if id == "L12"
        ));
    }

    #[test]
    fn slack_count_enforced() {
        let none = TWO_BUS.replace(r#""kind": "slack", "v_set": 1.0"#, r#""kind": "pq""#);
        assert!(matches!(
            load_network(&none).unwrap_err(),
            Error::SlackCount { count: 0 }
        ));
        let two = TWO_BUS.replace(r#""kind": "pq"}"#, r#""kind": "slack", "v_set": 1.0}"#);
        assert!(matches!(
            load_network(&two).unwrap_err(),
            Error::SlackCount { count: 2 }
        ));
    }

    #[test]
    fn schema_violation_reported() {
        let text = TWO_BUS.replace(
            r#""base_kv": 230, "kind": "pq""#,
            r#""base_kv": "x", "kind": "pq""#,
        );
        assert!(matches!(
            load_network(&text).unwrap_err(),
            Error::Schema { .. }
        ));
    }

    #[test]
    fn v_set_range_checked() {
        let text = TWO_BUS.replace(r#""v_set": 1.0"#, r#""v_set": 1.6"#);
        assert!(load_network(&text).is_err());
    }

    #[test]
    fn document_round_trip_is_stable() {
        let net = load_network(TWO_BUS).unwrap();
        let again = load_network(&net.to_json()).unwrap();
        assert_eq!(net, again);
    }
}
