#![allow(dead_code)]

use ward_ident::dynamics::{AvrAc5aParams, HydroGovParams};
use ward_ident::grid::{load_network, Network};

/// One machine on the slack bus feeding a load over a short line.
pub fn single_machine(
    load_mw: f64,
    gov: Option<HydroGovParams>,
    avr: Option<AvrAc5aParams>,
) -> Network {
    let machine = serde_json::json!({
        "id": "G1", "bus": "G", "s_nom_mva": 100.0, "h": 4.0, "xd": 1.0, "xd_p": 0.3,
        "td0_p": 5.0, "avr": avr, "gov": gov,
    });
    let doc = serde_json::json!({
        "s_base_mva": 100.0, "f_nominal_hz": 50.0,
        "buses": [
            {"id": "G", "base_kv": 20.0, "kind": "slack", "v_set": 1.02},
            {"id": "L", "base_kv": 110.0, "kind": "pq"}
        ],
        "branches": [{"id": "G-L", "from": "G", "to": "L",
            "impedance": {"s_base_mva": 100.0, "r": 0.01, "x": 0.1}}],
        "machines": [strip_nulls(machine)],
        "loads": [{"id": "LD", "bus": "L", "p_mw": load_mw, "q_mvar": 0.2 * load_mw}]
    });
    load_network(&doc.to_string()).unwrap()
}

/// Two machines on a short double path with loads at a middle bus.
pub fn two_machine(with_gov: bool) -> Network {
    let gov = with_gov.then(HydroGovParams::default);
    let avr = Some(AvrAc5aParams::default());
    let m = |id: &str, bus: &str, s: f64, h: f64, p: f64| {
        strip_nulls(serde_json::json!({
            "id": id, "bus": bus, "s_nom_mva": s, "h": h, "xd": 1.2, "xd_p": 0.3,
            "p_mw": p, "avr": avr, "gov": gov,
        }))
    };
    let doc = serde_json::json!({
        "s_base_mva": 100.0, "f_nominal_hz": 50.0,
        "buses": [
            {"id": "A", "base_kv": 20.0, "kind": "slack", "v_set": 1.02},
            {"id": "B", "base_kv": 20.0, "kind": "pv", "v_set": 1.01},
            {"id": "M", "base_kv": 110.0, "kind": "pq"}
        ],
        "branches": [
            {"id": "A-M", "from": "A", "to": "M", "impedance": {"s_base_mva": 100.0, "r": 0.01, "x": 0.08}},
            {"id": "B-M", "from": "B", "to": "M", "impedance": {"s_base_mva": 100.0, "r": 0.01, "x": 0.1}},
            {"id": "A-B", "from": "A", "to": "B", "impedance": {"s_base_mva": 100.0, "r": 0.02, "x": 0.2, "b_i": 0.01, "b_j": 0.01}}
        ],
        "machines": [m("GA", "A", 200.0, 5.0, 0.0), m("GB", "B", 150.0, 3.0, 80.0)],
        "loads": [{"id": "LM", "bus": "M", "p_mw": 150.0, "q_mvar": 40.0}]
    });
    load_network(&doc.to_string()).unwrap()
}

fn strip_nulls(mut v: serde_json::Value) -> serde_json::Value {
    if let Some(o) = v.as_object_mut() {
        o.retain(|_, x| !x.is_null());
    }
    v
}
