use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{Branch, BranchStatus, Bus, BusKind, Impedance, Load, Machine, Network};
use crate::dynamics::{AvrAc5aParams, HydroGovParams};
use crate::error::{Error, Result};

/// Internal reactance floor of an equivalent machine, pu on its own rating.
/// The identified series impedance carries the electrical distance.
pub const EQUIVALENT_XD_PU: f64 = 1e-4;

/// Speed damping of an equivalent machine, pu on its own rating.
pub const EQUIVALENT_DAMPING_PU: f64 = 8.0;

pub const COMMON_BRANCH_PREFIX: &str = "ZEQ-COMMON";

pub fn equivalent_bus_id(area: &str) -> String {
    format!("EQ-{area}")
}

pub fn equivalent_machine_id(area: &str) -> String {
    format!("GEQ-{area}")
}

pub fn equivalent_load_id(area: &str) -> String {
    format!("LEQ-{area}")
}

pub fn series_branch_id(area: &str) -> String {
    format!("ZEQ-{area}")
}

/// Equivalent of one replaced area: generator + series impedance to the
/// boundary bus + parallel load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaEquivalent {
    pub area: String,
    pub boundary_bus: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<Impedance>,
    pub s_nom_mva: f64,
    pub load_p_mw: f64,
    pub load_q_mvar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WardEquivalentParams {
    pub areas: Vec<AreaEquivalent>,
    /// Impedance linking the equivalent buses; required when two areas are
    /// replaced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub common: Option<Impedance>,
}

impl WardEquivalentParams {
    pub fn area(&self, id: &str) -> Option<&AreaEquivalent> {
        self.areas.iter().find(|a| a.area == id)
    }

    pub fn area_mut(&mut self, id: &str) -> Option<&mut AreaEquivalent> {
        self.areas.iter_mut().find(|a| a.area == id)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Json {
            context: "equivalent parameters".into(),
            source: e,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("parameters serialize")
    }
}

/// Default exciter for a freshly created equivalent machine.
pub(crate) fn default_equivalent_avr() -> AvrAc5aParams {
    AvrAc5aParams::default()
}

pub(crate) fn default_equivalent_gov() -> HydroGovParams {
    HydroGovParams::default()
}

/// Replaces every area listed in `params` by its generalized-Ward equivalent.
///
/// Each replaced area collapses to one bus `EQ-<area>` holding one machine
/// and one load, tied to its boundary bus by `ZEQ-<area>`. When two areas are
/// replaced their equivalent buses are joined by the common impedance. If the
/// slack bus lies inside a replaced area, that area's equivalent bus becomes
/// the slack at 1.0 pu.
pub fn apply_ward_equivalent(net: &Network, params: &WardEquivalentParams) -> Result<Network> {
    if params.areas.is_empty() {
        return Err(Error::invalid(
            "equivalent parameters",
            "no area to replace",
        ));
    }
    let mut replaced: HashSet<&str> = HashSet::new();
    for eq in &params.areas {
        if net.area(&eq.area).is_none() {
            return Err(Error::UnknownElement(format!("area '{}'", eq.area)));
        }
        if !replaced.insert(eq.area.as_str()) {
            return Err(Error::invalid(
                format!("area '{}'", eq.area),
                "listed twice in equivalent parameters",
            ));
        }
        let boundary = net
            .bus(&eq.boundary_bus)
            .ok_or_else(|| Error::UnknownElement(format!("boundary bus '{}'", eq.boundary_bus)))?;
        if !boundary.is_boundary {
            return Err(Error::invalid(
                format!("bus '{}'", eq.boundary_bus),
                "not tagged as a boundary bus",
            ));
        }
        if boundary.area.as_deref() == Some(eq.area.as_str()) {
            return Err(Error::invalid(
                format!("bus '{}'", eq.boundary_bus),
                "boundary bus lies inside the replaced area",
            ));
        }
        if eq.series.is_none() {
            return Err(Error::invalid(
                format!("equivalent of area '{}'", eq.area),
                "series impedance missing",
            ));
        }
        if !(eq.s_nom_mva > 0.0 && eq.s_nom_mva.is_finite()) {
            return Err(Error::invalid(
                format!("equivalent of area '{}'", eq.area),
                "s_nom_mva must be positive",
            ));
        }
    }
    if params.areas.len() > 2 {
        return Err(Error::invalid(
            "equivalent parameters",
            "at most two linked areas can be replaced",
        ));
    }
    if params.areas.len() == 2 && params.common.is_none() {
        return Err(Error::invalid(
            "equivalent parameters",
            "common impedance missing while two areas are replaced",
        ));
    }

    let mut doc = net.to_document();
    let in_replaced = |bus: &Bus| bus.area.as_deref().is_some_and(|a| replaced.contains(a));
    let removed: HashSet<String> = doc
        .buses
        .iter()
        .filter(|b| in_replaced(b))
        .map(|b| b.id.clone())
        .collect();
    let slack_area = doc
        .buses
        .iter()
        .find(|b| b.kind == BusKind::Slack && removed.contains(&b.id))
        .and_then(|b| b.area.clone());

    doc.buses.retain(|b| !removed.contains(&b.id));
    doc.branches
        .retain(|br| !removed.contains(&br.from) && !removed.contains(&br.to));
    doc.machines.retain(|m| !removed.contains(&m.bus));
    doc.loads.retain(|l| !removed.contains(&l.bus));

    let s_base = doc.s_base_mva;
    for eq in &params.areas {
        let base_kv = net.bus(&eq.boundary_bus).map(|b| b.base_kv).unwrap();
        let bus_id = equivalent_bus_id(&eq.area);
        let is_slack = slack_area.as_deref() == Some(eq.area.as_str());
        doc.buses.push(Bus {
            id: bus_id.clone(),
            base_kv,
            kind: if is_slack {
                BusKind::Slack
            } else {
                BusKind::Pq
            },
            v_set: is_slack.then_some(1.0),
            is_boundary: false,
            area: Some(eq.area.clone()),
        });
        doc.branches.push(Branch {
            id: series_branch_id(&eq.area),
            from: eq.boundary_bus.clone(),
            to: bus_id.clone(),
            impedance: eq.series.unwrap(),
            status: BranchStatus::In,
        });
        doc.machines.push(Machine {
            id: equivalent_machine_id(&eq.area),
            bus: bus_id.clone(),
            s_nom_mva: eq.s_nom_mva,
            h: 4.0,
            xd: Some(EQUIVALENT_XD_PU),
            xd_p: EQUIVALENT_XD_PU,
            td0_p: 5.0,
            d_damp: EQUIVALENT_DAMPING_PU,
            p_mw: 0.0,
            q_mvar: 0.0,
            q_min_mvar: None,
            q_max_mvar: None,
            avr: Some(default_equivalent_avr()),
            gov: Some(default_equivalent_gov()),
        });
        doc.loads.push(Load {
            id: equivalent_load_id(&eq.area),
            bus: bus_id,
            p_mw: eq.load_p_mw,
            q_mvar: eq.load_q_mvar,
        });
    }
    if params.areas.len() == 2 {
        let (a, b) = (&params.areas[0].area, &params.areas[1].area);
        doc.branches.push(Branch {
            id: format!("{COMMON_BRANCH_PREFIX}-{a}-{b}"),
            from: equivalent_bus_id(a),
            to: equivalent_bus_id(b),
            impedance: params.common.unwrap(),
            status: BranchStatus::In,
        });
    }
    debug_assert!(doc.s_base_mva == s_base);
    Network::new(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::load_network;

    const THREE_AREA: &str = r#"{
        "s_base_mva": 100, "f_nominal_hz": 50,
        "areas": [{"id": "A", "external": true}, {"id": "B"}, {"id": "C", "external": true}],
        "buses": [
            {"id": "A1", "base_kv": 400, "kind": "pv", "v_set": 1.0, "area": "A"},
            {"id": "A2", "base_kv": 400, "kind": "pq", "area": "A"},
            {"id": "B1", "base_kv": 400, "kind": "pq", "area": "B", "is_boundary": true},
            {"id": "B2", "base_kv": 400, "kind": "slack", "v_set": 1.0, "area": "B"},
            {"id": "B3", "base_kv": 400, "kind": "pq", "area": "B", "is_boundary": true},
            {"id": "C1", "base_kv": 400, "kind": "pv", "v_set": 1.0, "area": "C"}
        ],
        "branches": [
            {"id": "A1-A2", "from": "A1", "to": "A2", "impedance": {"s_base_mva": 100, "r": 0.0, "x": 0.05}},
            {"id": "A2-B1", "from": "A2", "to": "B1", "impedance": {"s_base_mva": 100, "r": 0.0, "x": 0.05}},
            {"id": "B1-B2", "from": "B1", "to": "B2", "impedance": {"s_base_mva": 100, "r": 0.0, "x": 0.05}},
            {"id": "B2-B3", "from": "B2", "to": "B3", "impedance": {"s_base_mva": 100, "r": 0.0, "x": 0.05}},
            {"id": "B3-C1", "from": "B3", "to": "C1", "impedance": {"s_base_mva": 100, "r": 0.0, "x": 0.05}},
            {"id": "A1-C1", "from": "A1", "to": "C1", "impedance": {"s_base_mva": 100, "r": 0.0, "x": 0.2}}
        ],
        "machines": [
            {"id": "GA", "bus": "A1", "s_nom_mva": 500, "h": 5, "xd_p": 0.3, "p_mw": 100},
            {"id": "GB", "bus": "B2", "s_nom_mva": 500, "h": 5, "xd_p": 0.3},
            {"id": "GC", "bus": "C1", "s_nom_mva": 500, "h": 5, "xd_p": 0.3, "p_mw": 100}
        ],
        "loads": [
            {"id": "LA", "bus": "A2", "p_mw": 50, "q_mvar": 10},
            {"id": "LB", "bus": "B1", "p_mw": 150, "q_mvar": 20}
        ]
    }"#;

    fn params() -> WardEquivalentParams {
        WardEquivalentParams {
            areas: vec![
                AreaEquivalent {
                    area: "A".into(),
                    boundary_bus: "B1".into(),
                    series: Some(Impedance::series(100.0, 0.0, 0.1)),
                    s_nom_mva: 1000.0,
                    load_p_mw: -50.0,
                    load_q_mvar: 0.0,
                },
                AreaEquivalent {
                    area: "C".into(),
                    boundary_bus: "B3".into(),
                    series: Some(Impedance::series(100.0, 0.0, 0.1)),
                    s_nom_mva: 1000.0,
                    load_p_mw: -100.0,
                    load_q_mvar: 0.0,
                },
            ],
            common: Some(Impedance::series(100.0, 0.0, 0.3)),
        }
    }

    #[test]
    fn replaces_two_areas_with_expected_structure() {
        let net = load_network(THREE_AREA).unwrap();
        let red = apply_ward_equivalent(&net, &params()).unwrap();
        let eq_machines = red
            .machines()
            .iter()
            .filter(|m| m.id.starts_with("GEQ-"))
            .count();
        let eq_loads = red
            .loads()
            .iter()
            .filter(|l| l.id.starts_with("LEQ-"))
            .count();
        let eq_branches = red
            .branches()
            .iter()
            .filter(|b| b.id.starts_with("ZEQ-"))
            .count();
        assert_eq!((eq_machines, eq_loads, eq_branches), (2, 2, 3));

        let retained_external = red
            .buses()
            .iter()
            .filter(|b| matches!(b.area.as_deref(), Some("A") | Some("C")))
            .filter(|b| !b.id.starts_with("EQ-"))
            .count();
        assert_eq!(retained_external, 0);
        assert!(red.machines().iter().all(|m| m.id != "GA" && m.id != "GC"));
        assert!(red.branch("A1-C1").is_none());
        // original untouched
        assert_eq!(net.buses().len(), 6);
    }

    #[test]
    fn missing_common_impedance_is_an_error() {
        let net = load_network(THREE_AREA).unwrap();
        let mut p = params();
        p.common = None;
        assert!(apply_ward_equivalent(&net, &p).is_err());
    }

    #[test]
    fn missing_series_impedance_is_an_error() {
        let net = load_network(THREE_AREA).unwrap();
        let mut p = params();
        p.areas[0].series = None;
        assert!(apply_ward_equivalent(&net, &p).is_err());
    }

    #[test]
    fn unknown_boundary_bus_is_an_error() {
        let net = load_network(THREE_AREA).unwrap();
        let mut p = params();
        p.areas[1].boundary_bus = "B7".into();
        let err = apply_ward_equivalent(&net, &p).unwrap_err();
        assert!(err.to_string().contains("B7"));
    }

    #[test]
    fn application_is_pure() {
        let net = load_network(THREE_AREA).unwrap();
        let a = apply_ward_equivalent(&net, &params()).unwrap();
        let b = apply_ward_equivalent(&net, &params()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn equivalent_machine_uses_reactance_floor() {
        let net = load_network(THREE_AREA).unwrap();
        let red = apply_ward_equivalent(&net, &params()).unwrap();
        let m = red.machines().iter().find(|m| m.id == "GEQ-A").unwrap();
        assert_eq!(m.xd_p, EQUIVALENT_XD_PU);
        assert_eq!(m.bus, "EQ-A");
    }
}
