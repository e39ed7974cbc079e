//! Three-phase bolted short circuit by Thevenin reduction of the
//! positive-sequence network, machines as sources behind `xd'`.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::powerflow::{solve_power_flow, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE};
use super::ybus::build_ybus;
use crate::error::{Error, Result};
use crate::grid::Network;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShortCircuitResult {
    pub bus: String,
    /// Initial symmetrical short-circuit power, MVA.
    pub skss_mva: f64,
    /// Initial symmetrical short-circuit current, kA.
    pub ikss_ka: f64,
    /// Thevenin impedance seen from the bus, pu on the system base.
    #[serde(skip)]
    pub thevenin_z: Complex64,
    /// Pre-fault voltage magnitude used, pu.
    pub prefault_v: f64,
}

impl ShortCircuitResult {
    /// Fault current in pu of the system base current at the bus.
    pub fn ikss_pu(&self, s_base_mva: f64) -> f64 {
        self.skss_mva / s_base_mva / self.prefault_v
    }
}

/// Short-circuit admittance matrix: the bus admittance matrix plus each
/// machine's `1/(j·xd')` on the system base.
pub fn short_circuit_ybus(net: &Network) -> DMatrix<Complex64> {
    let mut y = build_ybus(net);
    for m in net.machines() {
        let k = net.bus_index(&m.bus).unwrap();
        let x = m.xd_p * net.s_base_mva() / m.s_nom_mva;
        y[(k, k)] += Complex64::new(0.0, x).inv();
    }
    y
}

fn source_connected(net: &Network) -> Vec<bool> {
    let n = net.buses().len();
    let mut adj = vec![Vec::new(); n];
    for br in net.branches().iter().filter(|b| b.in_service()) {
        let i = net.bus_index(&br.from).unwrap();
        let j = net.bus_index(&br.to).unwrap();
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    for m in net.machines() {
        let k = net.bus_index(&m.bus).unwrap();
        if !seen[k] {
            seen[k] = true;
            queue.push_back(k);
        }
    }
    while let Some(i) = queue.pop_front() {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    seen
}

/// Thevenin impedances (pu, system base) at the requested buses.
pub fn thevenin_impedances(net: &Network, buses: &[&str]) -> Result<Vec<Complex64>> {
    let idx = buses
        .iter()
        .map(|b| {
            net.bus_index(b)
                .ok_or_else(|| Error::UnknownElement(format!("bus '{b}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    let connected = source_connected(net);
    for (&k, b) in idx.iter().zip(buses) {
        if !connected[k] {
            return Err(Error::IsolatedBus(b.to_string()));
        }
    }
    let y = short_circuit_ybus(net);
    let n = y.nrows();
    let lu = y.lu();
    let mut out = Vec::with_capacity(idx.len());
    for (&k, b) in idx.iter().zip(buses) {
        let mut e = nalgebra::DVector::from_element(n, Complex64::new(0.0, 0.0));
        e[k] = Complex64::new(1.0, 0.0);
        let col = lu
            .solve(&e)
            .ok_or_else(|| Error::IsolatedBus(format!("{b} (singular short-circuit matrix)")))?;
        let z = col[k];
        if !z.is_finite() {
            return Err(Error::IsolatedBus(b.to_string()));
        }
        if z.norm() < 1e-12 {
            return Err(Error::ZeroThevenin(b.to_string()));
        }
        out.push(z);
    }
    Ok(out)
}

pub fn thevenin_impedance(net: &Network, bus: &str) -> Result<Complex64> {
    Ok(thevenin_impedances(net, &[bus])?[0])
}

/// Short circuit with pre-fault voltages taken from the power flow.
pub fn short_circuit(net: &Network, bus: &str, c_factor: f64) -> Result<ShortCircuitResult> {
    let sol = solve_power_flow(net, DEFAULT_TOLERANCE, DEFAULT_MAX_ITER)?;
    sol.ensure_converged()?;
    let k = net
        .bus_index(bus)
        .ok_or_else(|| Error::UnknownElement(format!("bus '{bus}'")))?;
    short_circuit_with_prefault(net, bus, c_factor, sol.v[k])
}

/// Short circuit at `bus` for a given pre-fault voltage magnitude.
pub fn short_circuit_with_prefault(
    net: &Network,
    bus: &str,
    c_factor: f64,
    prefault_v: f64,
) -> Result<ShortCircuitResult> {
    let z = thevenin_impedance(net, bus)?;
    finish(net, bus, c_factor, prefault_v, z)
}

/// Short circuits at several buses sharing one factorization.
pub fn short_circuits(
    net: &Network,
    buses: &[&str],
    c_factor: f64,
    prefault_v: &[f64],
) -> Result<Vec<ShortCircuitResult>> {
    let zs = thevenin_impedances(net, buses)?;
    buses
        .iter()
        .zip(zs)
        .zip(prefault_v)
        .map(|((b, z), &v)| finish(net, b, c_factor, v, z))
        .collect()
}

fn finish(
    net: &Network,
    bus: &str,
    c_factor: f64,
    prefault_v: f64,
    z: Complex64,
) -> Result<ShortCircuitResult> {
    if !(c_factor > 0.0) || !(prefault_v > 0.0) {
        return Err(Error::invalid(
            format!("short circuit at '{bus}'"),
            "c factor and pre-fault voltage must be positive",
        ));
    }
    let skss_mva = c_factor * prefault_v * prefault_v / z.norm() * net.s_base_mva();
    let base_kv = net.bus(bus).unwrap().base_kv;
    Ok(ShortCircuitResult {
        bus: bus.to_string(),
        skss_mva,
        ikss_ka: skss_mva / (3f64.sqrt() * base_kv),
        thevenin_z: z,
        prefault_v,
    })
}
