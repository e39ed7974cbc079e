use std::path::Path;

use num_complex::Complex64;
use proptest::prelude::*;

use ward_ident::grid::BusKind;
use ward_ident::steady::{
    branch_flows, jacobian, mismatch, short_circuit, short_circuit_with_prefault, solve_power_flow,
    solve_power_flow_from, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE,
};
use ward_ident::{load_network, Network};

fn three_area() -> Network {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/three_area.json");
    load_network(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn two_bus(p_mw: f64, q_mvar: f64) -> Network {
    load_network(
        &serde_json::json!({
            "s_base_mva": 100.0, "f_nominal_hz": 50.0,
            "buses": [
                {"id": "B1", "base_kv": 230.0, "kind": "slack", "v_set": 1.0},
                {"id": "B2", "base_kv": 230.0, "kind": "pq"}
            ],
            "branches": [{"id": "L12", "from": "B1", "to": "B2",
                "impedance": {"s_base_mva": 100.0, "r": 0.0, "x": 0.1}}],
            "loads": [{"id": "LD2", "bus": "B2", "p_mw": p_mw, "q_mvar": q_mvar}]
        })
        .to_string(),
    )
    .unwrap()
}

/// Applies a step to the unknowns `[θ(pv,pq); |V|(pq)]` in bus order.
fn perturbed(net: &Network, v: &[Complex64], var: usize, h: f64) -> Vec<Complex64> {
    let pvpq: Vec<usize> = (0..v.len())
        .filter(|&k| net.buses()[k].kind != BusKind::Slack)
        .collect();
    let pq: Vec<usize> = (0..v.len())
        .filter(|&k| net.buses()[k].kind == BusKind::Pq)
        .collect();
    let mut out = v.to_vec();
    if var < pvpq.len() {
        let k = pvpq[var];
        out[k] *= Complex64::from_polar(1.0, h);
    } else {
        let k = pq[var - pvpq.len()];
        let (m, a) = out[k].to_polar();
        out[k] = Complex64::from_polar(m + h, a);
    }
    out
}

#[test]
fn jacobian_matches_central_differences() {
    let net = three_area();
    let sol = solve_power_flow(&net, 1e-10, 50).unwrap();
    // move away from the solution so every entry is exercised
    let v: Vec<Complex64> = sol
        .voltages()
        .iter()
        .enumerate()
        .map(|(k, v)| v * Complex64::from_polar(1.0 + 0.01 * k as f64, -0.02 * k as f64))
        .collect();
    let jac = jacobian(&net, &v);
    let h = 1e-6;
    for c in 0..jac.ncols() {
        let fp = mismatch(&net, &perturbed(&net, &v, c, h));
        let fm = mismatch(&net, &perturbed(&net, &v, c, -h));
        for r in 0..jac.nrows() {
            let fd = (fp[r] - fm[r]) / (2.0 * h);
            assert!(
                (fd - jac[(r, c)]).abs() <= 1e-5 * (1.0 + fd.abs()),
                "J[{r},{c}] = {} vs {fd}",
                jac[(r, c)]
            );
        }
    }
}

#[test]
fn net_injection_equals_branch_losses() {
    let net = three_area();
    let sol = solve_power_flow(&net, 1e-10, 50).unwrap();
    assert!(sol.converged);
    let injected: f64 = sol.injection.iter().map(|s| s.re).sum::<f64>() * net.s_base_mva();
    let losses: f64 = branch_flows(&sol, &net)
        .unwrap()
        .iter()
        .map(|f| f.losses_mw())
        .sum();
    assert!((injected - losses).abs() < 1e-6, "{injected} vs {losses}");
    assert!(losses > 0.0);
}

#[test]
fn solution_restart_needs_no_iteration() {
    let net = three_area();
    let sol = solve_power_flow(&net, DEFAULT_TOLERANCE, DEFAULT_MAX_ITER).unwrap();
    let again =
        solve_power_flow_from(&net, &sol.voltages(), DEFAULT_TOLERANCE, DEFAULT_MAX_ITER).unwrap();
    assert!(again.converged);
    assert!(again.iterations <= 1);
    for (a, b) in sol.v.iter().zip(&again.v) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn stronger_connection_raises_short_circuit_level() {
    let net = three_area();
    let base = short_circuit(&net, "B1", 1.0).unwrap();
    let stiffer = net
        .modified(|d| {
            for br in d.branches.iter_mut() {
                br.impedance.x *= 0.8;
            }
        })
        .unwrap();
    let higher = short_circuit(&stiffer, "B1", 1.0).unwrap();
    assert!(higher.skss_mva > base.skss_mva);
}

#[test]
fn short_circuit_scales_with_c_and_v_squared() {
    let net = three_area();
    let r1 = short_circuit_with_prefault(&net, "B2", 1.0, 1.0).unwrap();
    let r2 = short_circuit_with_prefault(&net, "B2", 1.1, 1.0).unwrap();
    let r3 = short_circuit_with_prefault(&net, "B2", 1.0, 1.05).unwrap();
    assert!((r2.skss_mva / r1.skss_mva - 1.1).abs() < 1e-12);
    assert!((r3.skss_mva / r1.skss_mva - 1.05 * 1.05).abs() < 1e-12);
    assert!((r1.ikss_ka * 3f64.sqrt() * 230.0 - r1.skss_mva).abs() < 1e-9 * r1.skss_mva);
}

#[test]
fn shipped_grid_converges_quickly() {
    let sol = solve_power_flow(&three_area(), DEFAULT_TOLERANCE, DEFAULT_MAX_ITER).unwrap();
    assert!(sol.converged && sol.iterations <= 6);
    assert!(sol.max_mismatch <= DEFAULT_TOLERANCE);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Lossless two-bus line: the power arriving at the load bus, computed
    /// from the solved voltages, equals the load.
    #[test]
    fn two_bus_receiving_power_matches_load(p in 0.0f64..200.0, q in -50.0f64..50.0) {
        let net = two_bus(p, q);
        let sol = solve_power_flow(&net, 1e-10, 50).unwrap();
        prop_assert!(sol.converged);
        let v1 = sol.voltage(0);
        let v2 = sol.voltage(1);
        let i = (v1 - v2) / Complex64::new(0.0, 0.1);
        let s2 = v2 * i.conj() * 100.0;
        prop_assert!((s2.re - p).abs() < 1e-6);
        prop_assert!((s2.im - q).abs() < 1e-6);
    }
}
