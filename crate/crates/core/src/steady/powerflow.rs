//! Newton–Raphson AC power flow in polar coordinates.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::ybus::{branch_stamp, build_ybus, terminal_current};
use crate::error::{Error, Result};
use crate::grid::{flow_branches, BusKind, Network};

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 50;

/// Power entering one branch at both ends, MW / MVAr.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchFlow {
    pub id: String,
    pub from: String,
    pub to: String,
    pub p_from: f64,
    pub q_from: f64,
    pub p_to: f64,
    pub q_to: f64,
}

impl BranchFlow {
    pub fn losses_mw(&self) -> f64 {
        self.p_from + self.p_to
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerFlowSolution {
    pub bus_ids: Vec<String>,
    /// Voltage magnitude per bus, pu.
    pub v: Vec<f64>,
    /// Voltage angle per bus, rad.
    pub theta: Vec<f64>,
    /// Flows on in-service branches.
    pub flows: Vec<BranchFlow>,
    pub converged: bool,
    pub iterations: usize,
    /// Largest P/Q mismatch of the final iterate, pu.
    pub max_mismatch: f64,
    /// Net complex injection per bus (generation − load), pu.
    #[serde(skip)]
    pub injection: Vec<Complex64>,
}

impl PowerFlowSolution {
    pub fn voltage(&self, k: usize) -> Complex64 {
        Complex64::from_polar(self.v[k], self.theta[k])
    }

    pub fn voltages(&self) -> Vec<Complex64> {
        (0..self.v.len()).map(|k| self.voltage(k)).collect()
    }

    pub fn bus_position(&self, id: &str) -> Option<usize> {
        self.bus_ids.iter().position(|b| b == id)
    }

    pub fn ensure_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NotConverged {
                iterations: self.iterations,
                max_mismatch: self.max_mismatch,
            })
        }
    }
}

/// Specified injections (generation − load) per bus, pu. Slack P/Q and PV Q
/// entries are placeholders the solver never checks.
pub fn specified_injections(net: &Network) -> Vec<Complex64> {
    let sb = net.s_base_mva();
    let mut s = vec![Complex64::new(0.0, 0.0); net.buses().len()];
    for m in net.machines() {
        let k = net.bus_index(&m.bus).unwrap();
        s[k] += Complex64::new(m.p_mw, m.q_mvar) / sb;
    }
    for l in net.loads() {
        let k = net.bus_index(&l.bus).unwrap();
        s[k] -= Complex64::new(l.p_mw, l.q_mvar) / sb;
    }
    s
}

fn check_connectivity(net: &Network) -> Result<()> {
    let n = net.buses().len();
    let mut adj = vec![Vec::new(); n];
    for br in net.branches().iter().filter(|b| b.in_service()) {
        let i = net.bus_index(&br.from).unwrap();
        let j = net.bus_index(&br.to).unwrap();
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([net.slack_index()]);
    seen[net.slack_index()] = true;
    while let Some(i) = queue.pop_front() {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    match seen.iter().position(|s| !s) {
        Some(k) => Err(Error::SingularJacobian(format!(
            "bus '{}' is islanded from the slack",
            net.buses()[k].id
        ))),
        None => Ok(()),
    }
}

struct Indexing {
    pvpq: Vec<usize>,
    pq: Vec<usize>,
}

fn indexing(net: &Network) -> Indexing {
    let mut pvpq = Vec::new();
    let mut pq = Vec::new();
    for (k, b) in net.buses().iter().enumerate() {
        match b.kind {
            BusKind::Slack => {}
            BusKind::Pv => pvpq.push(k),
            BusKind::Pq => {
                pvpq.push(k);
                pq.push(k);
            }
        }
    }
    Indexing { pvpq, pq }
}

fn calc_injection(y: &DMatrix<Complex64>, v: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = v.len();
    let mut i_bus = vec![Complex64::new(0.0, 0.0); n];
    for (r, ib) in i_bus.iter_mut().enumerate() {
        for (c, vc) in v.iter().enumerate() {
            *ib += y[(r, c)] * vc;
        }
    }
    let s = v.iter().zip(&i_bus).map(|(v, i)| v * i.conj()).collect();
    (s, i_bus)
}

fn mismatch_vector(ix: &Indexing, s_calc: &[Complex64], s_spec: &[Complex64]) -> DVector<f64> {
    let npvpq = ix.pvpq.len();
    let mut f = DVector::zeros(npvpq + ix.pq.len());
    for (r, &k) in ix.pvpq.iter().enumerate() {
        f[r] = s_calc[k].re - s_spec[k].re;
    }
    for (r, &k) in ix.pq.iter().enumerate() {
        f[npvpq + r] = s_calc[k].im - s_spec[k].im;
    }
    f
}

fn analytic_jacobian(
    ix: &Indexing,
    y: &DMatrix<Complex64>,
    v: &[Complex64],
    i_bus: &[Complex64],
) -> DMatrix<f64> {
    let j = Complex64::new(0.0, 1.0);
    let d_va = |r: usize, c: usize| {
        let diag = if r == c {
            i_bus[r]
        } else {
            Complex64::new(0.0, 0.0)
        };
        j * v[r] * (diag - y[(r, c)] * v[c]).conj()
    };
    let d_vm = |r: usize, c: usize| {
        let vn = v[c] / v[c].norm();
        let mut s = v[r] * (y[(r, c)] * vn).conj();
        if r == c {
            s += i_bus[r].conj() * vn;
        }
        s
    };
    let npvpq = ix.pvpq.len();
    let n = npvpq + ix.pq.len();
    let mut jac = DMatrix::zeros(n, n);
    for (a, &r) in ix.pvpq.iter().enumerate() {
        for (b, &c) in ix.pvpq.iter().enumerate() {
            jac[(a, b)] = d_va(r, c).re;
        }
        for (b, &c) in ix.pq.iter().enumerate() {
            jac[(a, npvpq + b)] = d_vm(r, c).re;
        }
    }
    for (a, &r) in ix.pq.iter().enumerate() {
        for (b, &c) in ix.pvpq.iter().enumerate() {
            jac[(npvpq + a, b)] = d_va(r, c).im;
        }
        for (b, &c) in ix.pq.iter().enumerate() {
            jac[(npvpq + a, npvpq + b)] = d_vm(r, c).im;
        }
    }
    jac
}

/// Mismatch vector `[ΔP(pv,pq); ΔQ(pq)]` at voltages `v`.
pub fn mismatch(net: &Network, v: &[Complex64]) -> DVector<f64> {
    let ix = indexing(net);
    let y = build_ybus(net);
    let (s, _) = calc_injection(&y, v);
    mismatch_vector(&ix, &s, &specified_injections(net))
}

/// Analytic Jacobian of [`mismatch`] w.r.t. `[θ(pv,pq); |V|(pq)]`.
pub fn jacobian(net: &Network, v: &[Complex64]) -> DMatrix<f64> {
    let ix = indexing(net);
    let y = build_ybus(net);
    let (_, i_bus) = calc_injection(&y, v);
    analytic_jacobian(&ix, &y, v, &i_bus)
}

/// Flat start: setpoint magnitudes on slack/PV buses, 1.0 elsewhere, zero angles.
pub fn flat_start(net: &Network) -> Vec<Complex64> {
    net.buses()
        .iter()
        .map(|b| match b.kind {
            BusKind::Pq => Complex64::new(1.0, 0.0),
            _ => Complex64::new(b.v_set.unwrap(), 0.0),
        })
        .collect()
}

pub fn solve_power_flow(net: &Network, tol: f64, max_iter: usize) -> Result<PowerFlowSolution> {
    solve_power_flow_from(net, &flat_start(net), tol, max_iter)
}

/// Power flow starting from the given voltages (setpoints are re-imposed).
pub fn solve_power_flow_from(
    net: &Network,
    initial: &[Complex64],
    tol: f64,
    max_iter: usize,
) -> Result<PowerFlowSolution> {
    if !(tol > 0.0) {
        return Err(Error::invalid("power flow", "tolerance must be positive"));
    }
    if initial.len() != net.buses().len() {
        return Err(Error::invalid(
            "power flow",
            "initial voltage vector length",
        ));
    }
    check_connectivity(net)?;
    let ix = indexing(net);
    let y = build_ybus(net);
    let s_spec = specified_injections(net);

    let mut vm: Vec<f64> = initial.iter().map(|v| v.norm()).collect();
    let mut va: Vec<f64> = initial.iter().map(|v| v.arg()).collect();
    for (k, b) in net.buses().iter().enumerate() {
        if b.kind != BusKind::Pq {
            vm[k] = b.v_set.unwrap();
        }
    }
    let npvpq = ix.pvpq.len();

    let mut iterations = 0;
    let mut converged = false;
    let mut max_mismatch;
    loop {
        let v: Vec<Complex64> = vm
            .iter()
            .zip(&va)
            .map(|(&m, &a)| Complex64::from_polar(m, a))
            .collect();
        let (s_calc, i_bus) = calc_injection(&y, &v);
        let f = mismatch_vector(&ix, &s_calc, &s_spec);
        max_mismatch = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !max_mismatch.is_finite() {
            break;
        }
        if max_mismatch <= tol {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        let jac = analytic_jacobian(&ix, &y, &v, &i_bus);
        let dx = match jac.lu().solve(&(-f)) {
            Some(dx) => dx,
            None if iterations == 0 => {
                return Err(Error::SingularJacobian(
                    "Jacobian is singular at the initial point".into(),
                ))
            }
            None => break,
        };
        for (r, &k) in ix.pvpq.iter().enumerate() {
            va[k] += dx[r];
        }
        for (r, &k) in ix.pq.iter().enumerate() {
            vm[k] += dx[npvpq + r];
        }
        iterations += 1;
    }

    let v: Vec<Complex64> = vm
        .iter()
        .zip(&va)
        .map(|(&m, &a)| Complex64::from_polar(m, a))
        .collect();
    let (injection, _) = calc_injection(&y, &v);
    let sb = net.s_base_mva();
    let flows = net
        .branches()
        .iter()
        .filter(|b| b.in_service())
        .map(|br| {
            let i = net.bus_index(&br.from).unwrap();
            let j = net.bus_index(&br.to).unwrap();
            let st = branch_stamp(&br.impedance);
            let s_from = v[i] * terminal_current(&st, v[i], v[j], true).conj() * sb;
            let s_to = v[j] * terminal_current(&st, v[i], v[j], false).conj() * sb;
            BranchFlow {
                id: br.id.clone(),
                from: br.from.clone(),
                to: br.to.clone(),
                p_from: s_from.re,
                q_from: s_from.im,
                p_to: s_to.re,
                q_to: s_to.im,
            }
        })
        .collect();

    Ok(PowerFlowSolution {
        bus_ids: net.buses().iter().map(|b| b.id.clone()).collect(),
        v: vm,
        theta: va,
        flows,
        converged,
        iterations,
        max_mismatch,
        injection,
    })
}

/// Branch-end flows of a converged solution; open branches are excluded.
pub fn branch_flows(sol: &PowerFlowSolution, net: &Network) -> Result<Vec<BranchFlow>> {
    sol.ensure_converged()?;
    if sol.bus_ids.len() != net.buses().len() {
        return Err(Error::Precondition(
            "power flow solution does not belong to this network".into(),
        ));
    }
    Ok(sol.flows.clone())
}

/// Complex power (MW + j·MVAr) flowing from `bus` into the flow element
/// `element` (a branch id, or an area id meaning all branches from `bus`
/// into that area) for bus voltages `v`.
pub fn element_flow(net: &Network, v: &[Complex64], element: &str, bus: &str) -> Result<Complex64> {
    let k = net
        .bus_index(bus)
        .ok_or_else(|| Error::UnknownElement(format!("bus '{bus}'")))?;
    let mut s = Complex64::new(0.0, 0.0);
    for (b, at_from) in flow_branches(net, element, bus)? {
        let br = &net.branches()[b];
        if !br.in_service() {
            continue;
        }
        let i = net.bus_index(&br.from).unwrap();
        let j = net.bus_index(&br.to).unwrap();
        let cur = terminal_current(&branch_stamp(&br.impedance), v[i], v[j], at_from);
        s += v[k] * cur.conj();
    }
    Ok(s * net.s_base_mva())
}

/// Complex output of machine `idx` in a solution, pu on the system base.
pub fn machine_output(net: &Network, sol: &PowerFlowSolution, idx: usize) -> Complex64 {
    let m = &net.machines()[idx];
    let k = net.bus_index(&m.bus).unwrap();
    let load: Complex64 = net
        .loads()
        .iter()
        .filter(|l| l.bus == m.bus)
        .map(|l| Complex64::new(l.p_mw, l.q_mvar))
        .sum::<Complex64>()
        / net.s_base_mva();
    sol.injection[k] + load
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::load_network;

    pub(crate) fn two_bus(p_mw: f64) -> Network {
        load_network(&format!(
            r#"{{
            "s_base_mva": 100, "f_nominal_hz": 50,
            "buses": [
                {{"id": "B1", "base_kv": 230, "kind": "slack", "v_set": 1.0}},
                {{"id": "B2", "base_kv": 230, "kind": "pq"}}
            ],
            "branches": [{{"id": "L12", "from": "B1", "to": "B2",
                "impedance": {{"s_base_mva": 100, "r": 0.0, "x": 0.1}}}}],
            "loads": [{{"id": "LD2", "bus": "B2", "p_mw": {p_mw}, "q_mvar": 0}}]
        }}"#
        ))
        .unwrap()
    }

    #[test]
    fn two_bus_matches_closed_form() {
        // closed form: b = -P·x, a² - a + b² = 0
        let b: f64 = -0.05;
        let a = (1.0 + (1.0 - 4.0 * b * b).sqrt()) / 2.0;
        let sol = solve_power_flow(&two_bus(50.0), 1e-10, 50).unwrap();
        assert!(sol.converged);
        assert!((sol.v[1] - (a * a + b * b).sqrt()).abs() < 1e-9);
        assert!((sol.theta[1] - b.atan2(a)).abs() < 1e-9);
    }

    #[test]
    fn beyond_loadability_not_converged() {
        let sol = solve_power_flow(&two_bus(600.0), 1e-8, 50).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 50);
    }

    #[test]
    fn flat_case_zero_iterations() {
        let sol = solve_power_flow(&two_bus(0.0), 1e-8, 50).unwrap();
        assert!(sol.converged && sol.iterations <= 1);
        assert_eq!(sol.v, vec![1.0, 1.0]);
        assert!(sol.flows.iter().all(|f| f.p_from == 0.0 && f.q_to == 0.0));
    }

    #[test]
    fn lossless_branch_flow_antisymmetric() {
        let sol = solve_power_flow(&two_bus(50.0), 1e-10, 50).unwrap();
        let f = &branch_flows(&sol, &two_bus(50.0)).unwrap()[0];
        assert!((f.p_from + f.p_to).abs() < 1e-9);
        assert!((f.p_to + 50.0).abs() < 1e-6);
    }

    #[test]
    fn branch_flows_require_convergence() {
        let net = two_bus(600.0);
        let sol = solve_power_flow(&net, 1e-8, 50).unwrap();
        assert!(branch_flows(&sol, &net).is_err());
    }

    #[test]
    fn warm_start_reconverges_quickly() {
        let net = two_bus(50.0);
        let sol = solve_power_flow(&net, 1e-8, 50).unwrap();
        let again = solve_power_flow_from(&net, &sol.voltages(), 1e-8, 50).unwrap();
        assert!(again.converged && again.iterations <= 2);
    }

    #[test]
    fn open_branch_excluded_and_islands_detected() {
        let net = two_bus(50.0)
            .modified(|d| d.branches[0].status = crate::grid::BranchStatus::Out)
            .unwrap();
        assert!(matches!(
            solve_power_flow(&net, 1e-8, 50),
            Err(Error::SingularJacobian(_))
        ));
    }
}
