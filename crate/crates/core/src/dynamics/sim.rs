//! Fixed-step RMS simulation of machines, controls and the algebraic network.
//!
//! Each derivative evaluation first solves the network equations
//! `Y_aug·v − I_N(x) + I_L(v) = 0` by Newton iteration in rectangular
//! coordinates, where `Y_aug` is the bus admittance matrix with machine
//! admittances `1/(j·xd')`, `I_N` the machines' Norton currents and `I_L`
//! the constant-power load currents (constant impedance below a voltage
//! threshold). States are then advanced with classical RK4.

use std::f64::consts::PI;

use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::avr::{Ac5a, AvrState};
use super::events::{Event, EventKind};
use super::governor::{GovState, HydroGovernor};
use super::machine::{d_axis_current, flux_decay_derivative, swing_derivatives, MachineState};
use super::signals::{ChannelId, Quantity, SignalSet};
use crate::error::{Error, Result};
use crate::grid::{flow_branches, BusKind, Network};
use crate::steady::ybus::{branch_stamp, faulted_stamp, terminal_current, Stamp};
use crate::steady::{machine_output, PowerFlowSolution};

/// Any state beyond this magnitude is treated as numerical blow-up.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

fn default_dt() -> f64 {
    0.01
}
fn default_fault_admittance() -> f64 {
    1e4
}
fn default_freq_filter() -> f64 {
    0.05
}
fn default_low_voltage() -> f64 {
    0.4
}
fn default_newton_tol() -> f64 {
    1e-10
}
fn default_newton_max_iter() -> usize {
    30
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Integration and sampling step, seconds.
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Shunt admittance of a fault, pu on the system base.
    #[serde(default = "default_fault_admittance")]
    pub fault_admittance_pu: f64,
    /// Time constant of the bus-frequency estimator, seconds.
    #[serde(default = "default_freq_filter")]
    pub freq_filter_s: f64,
    /// Loads become constant impedances below this voltage, pu.
    #[serde(default = "default_low_voltage")]
    pub low_voltage_pu: f64,
    /// Network Newton tolerance on the per-bus scaled current residual.
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_max_iter")]
    pub newton_max_iter: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: default_dt(),
            fault_admittance_pu: default_fault_admittance(),
            freq_filter_s: default_freq_filter(),
            low_voltage_pu: default_low_voltage(),
            newton_tol: default_newton_tol(),
            newton_max_iter: default_newton_max_iter(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.dt > 0.0
            && self.dt.is_finite()
            && self.fault_admittance_pu > 0.0
            && self.freq_filter_s > 0.0
            && self.low_voltage_pu > 0.0
            && self.low_voltage_pu < 1.0
            && self.newton_tol > 0.0
            && self.newton_max_iter > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("simulation settings", "out-of-range value"))
        }
    }
}

/// Control setpoints fixed at initialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MachineSetpoints {
    pub vref: f64,
    pub p_ref: f64,
    /// Field voltage used when the machine has no exciter.
    pub efd0: f64,
    /// Mechanical power used when the machine has no governor.
    pub pm0: f64,
}

/// Complete simulation state: differential states, network voltages and
/// the control setpoints that make the initial point an equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicState {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<Complex64>,
    pub setpoints: Vec<MachineSetpoints>,
}

struct MachineModel {
    id: String,
    bus: usize,
    h: f64,
    d_damp: f64,
    xd: f64,
    xd_p: f64,
    td0_p: f64,
    /// System base over machine base.
    scale: f64,
    y_m: Complex64,
    avr: Option<Ac5a>,
    gov: Option<HydroGovernor>,
    offset: usize,
    avr_offset: Option<usize>,
    gov_offset: Option<usize>,
}

enum Probe {
    Vmag(usize),
    Vang(usize),
    Freq(usize),
    Flow {
        bus: usize,
        branches: Vec<(usize, bool)>,
        reactive: bool,
    },
}

enum Action {
    LoadDelta(usize, Complex64),
    BusShunt(usize, Complex64),
    LineFault(usize, f64),
    LineOut(usize),
}

fn wrap(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

pub struct Simulator<'a> {
    net: &'a Network,
    cfg: SimConfig,
    omega_base: f64,
    machines: Vec<MachineModel>,
    names: Vec<String>,
    freq_offset: usize,
    stamps: Vec<Option<Stamp>>,
    bus_shunt: Vec<Complex64>,
    load_s: Vec<Complex64>,
    y_aug: DMatrix<Complex64>,
    v: Vec<Complex64>,
    setpoints: Vec<MachineSetpoints>,
    t: f64,
}

impl<'a> Simulator<'a> {
    pub fn new(net: &'a Network, cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let min_lag = cfg.dt / 2.0;
        let sb = net.s_base_mva();
        let mut names = Vec::new();
        let mut machines = Vec::new();
        for m in net.machines() {
            let offset = names.len();
            names.extend(MachineState::NAMES.iter().map(|n| format!("{}.{n}", m.id)));
            let avr = match &m.avr {
                Some(p) => Some(
                    Ac5a::new(p.clone(), min_lag)
                        .map_err(|e| Error::invalid(format!("AVR of '{}'", m.id), e.to_string()))?,
                ),
                None => None,
            };
            let avr_offset = avr.as_ref().map(|_| {
                let o = names.len();
                names.extend(AvrState::NAMES.iter().map(|n| format!("{}.{n}", m.id)));
                o
            });
            let gov = m.gov.clone().map(|p| HydroGovernor::new(p, min_lag));
            let gov_offset = gov.as_ref().map(|_| {
                let o = names.len();
                names.extend(GovState::NAMES.iter().map(|n| format!("{}.{n}", m.id)));
                o
            });
            let scale = sb / m.s_nom_mva;
            machines.push(MachineModel {
                id: m.id.clone(),
                bus: net.bus_index(&m.bus).unwrap(),
                h: m.h,
                d_damp: m.d_damp,
                xd: m.xd(),
                xd_p: m.xd_p,
                td0_p: m.td0_p,
                scale,
                y_m: Complex64::new(0.0, m.xd_p * scale).inv(),
                avr,
                gov,
                offset,
                avr_offset,
                gov_offset,
            });
        }
        let freq_offset = names.len();
        names.extend(net.buses().iter().map(|b| format!("{}.freq_filter", b.id)));

        let n = net.buses().len();
        let mut load_s = vec![Complex64::new(0.0, 0.0); n];
        for l in net.loads() {
            load_s[net.bus_index(&l.bus).unwrap()] += Complex64::new(l.p_mw, l.q_mvar) / sb;
        }
        let stamps = net
            .branches()
            .iter()
            .map(|b| b.in_service().then(|| branch_stamp(&b.impedance)))
            .collect();
        let mut sim = Simulator {
            net,
            omega_base: 2.0 * PI * net.f_nominal_hz(),
            cfg,
            machines,
            names,
            freq_offset,
            stamps,
            bus_shunt: vec![Complex64::new(0.0, 0.0); n],
            load_s,
            y_aug: DMatrix::zeros(n, n),
            v: vec![Complex64::new(1.0, 0.0); n],
            setpoints: Vec::new(),
            t: 0.0,
        };
        sim.rebuild_admittance();
        Ok(sim)
    }

    /// Names of the differential states, in state-vector order.
    pub fn state_names(&self) -> &[String] {
        &self.names
    }

    pub fn omega_base(&self) -> f64 {
        self.omega_base
    }

    fn rebuild_admittance(&mut self) {
        let n = self.net.buses().len();
        let mut y = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        for (br, st) in self.net.branches().iter().zip(&self.stamps) {
            if let Some(st) = st {
                let i = self.net.bus_index(&br.from).unwrap();
                let j = self.net.bus_index(&br.to).unwrap();
                crate::steady::ybus::add_stamp(&mut y, i, j, st);
            }
        }
        for m in &self.machines {
            y[(m.bus, m.bus)] += m.y_m;
        }
        for (k, s) in self.bus_shunt.iter().enumerate() {
            y[(k, k)] += s;
        }
        self.y_aug = y;
    }

    /// Equilibrium initial state from a converged power flow.
    pub fn initialize(&mut self, sol: &PowerFlowSolution) -> Result<DynamicState> {
        sol.ensure_converged()?;
        let net = self.net;
        if sol.bus_ids.len() != net.buses().len()
            || sol.bus_ids.iter().zip(net.buses()).any(|(a, b)| *a != b.id)
        {
            return Err(Error::Precondition(
                "power flow solution does not belong to this network".into(),
            ));
        }
        for b in net.buses() {
            if b.kind != BusKind::Pq && !net.machines().iter().any(|m| m.bus == b.id) {
                return Err(Error::invalid(
                    format!("bus '{}'", b.id),
                    "voltage-controlled bus without a machine cannot be simulated",
                ));
            }
        }
        let mut x = vec![0.0; self.names.len()];
        let mut setpoints = Vec::with_capacity(self.machines.len());
        for (idx, m) in self.machines.iter().enumerate() {
            let s = machine_output(net, sol, idx);
            let v = sol.voltage(m.bus);
            let i = (s / v).conj();
            let e = v + i / m.y_m;
            let delta = e.arg();
            let eq_p = e.norm();
            let id = d_axis_current(i * m.scale, delta);
            let efd0 = eq_p + (m.xd - m.xd_p) * id;
            let pm0 = (e * i.conj()).re * m.scale;
            x[m.offset] = delta;
            x[m.offset + 1] = 1.0;
            x[m.offset + 2] = eq_p;
            let mut sp = MachineSetpoints {
                vref: v.norm(),
                p_ref: pm0,
                efd0,
                pm0,
            };
            if let (Some(avr), Some(o)) = (&m.avr, m.avr_offset) {
                let (st, vref) = avr.initialize(&m.id, v.norm(), efd0)?;
                st.write(&mut x[o..o + AvrState::LEN]);
                sp.vref = vref;
            }
            if let (Some(gov), Some(o)) = (&m.gov, m.gov_offset) {
                let (st, p_ref) = gov.initialize(&m.id, pm0)?;
                st.write(&mut x[o..o + GovState::LEN]);
                sp.p_ref = p_ref;
            }
            setpoints.push(sp);
        }
        for k in 0..net.buses().len() {
            x[self.freq_offset + k] = sol.theta[k];
        }
        self.setpoints = setpoints.clone();
        self.v = sol.voltages();
        self.t = 0.0;
        self.solve_network(&x)?;
        Ok(DynamicState {
            t: 0.0,
            x,
            v: self.v.clone(),
            setpoints,
        })
    }

    fn load_current(&self, k: usize, v: Complex64) -> Complex64 {
        let s = self.load_s[k];
        let vm = v.norm();
        if vm >= self.cfg.low_voltage_pu {
            (s / v).conj()
        } else {
            s.conj() / (self.cfg.low_voltage_pu * self.cfg.low_voltage_pu) * v
        }
    }

    fn norton(&self, x: &[f64]) -> Vec<Complex64> {
        let mut i_n = vec![Complex64::new(0.0, 0.0); self.net.buses().len()];
        for m in &self.machines {
            let e = Complex64::from_polar(x[m.offset + 2], x[m.offset]);
            i_n[m.bus] += e * m.y_m;
        }
        i_n
    }

    /// Solves the network for the machine states in `x`, warm-started from
    /// the previous solution.
    fn solve_network(&mut self, x: &[f64]) -> Result<()> {
        let n = self.net.buses().len();
        let i_n = self.norton(x);
        let scale: Vec<f64> = (0..n).map(|k| self.y_aug[(k, k)].norm().max(1.0)).collect();
        let mut v = self.v.clone();
        for _ in 0..=self.cfg.newton_max_iter {
            let mut f = DVector::zeros(2 * n);
            let mut worst = 0.0f64;
            for r in 0..n {
                let mut fr = -i_n[r] + self.load_current(r, v[r]);
                for c in 0..n {
                    fr += self.y_aug[(r, c)] * v[c];
                }
                f[2 * r] = fr.re;
                f[2 * r + 1] = fr.im;
                worst = worst.max(fr.norm() / scale[r]);
            }
            if !worst.is_finite() {
                break;
            }
            if worst <= self.cfg.newton_tol {
                self.v = v;
                return Ok(());
            }
            let mut jac = DMatrix::zeros(2 * n, 2 * n);
            for r in 0..n {
                for c in 0..n {
                    let y = self.y_aug[(r, c)];
                    jac[(2 * r, 2 * c)] = y.re;
                    jac[(2 * r, 2 * c + 1)] = -y.im;
                    jac[(2 * r + 1, 2 * c)] = y.im;
                    jac[(2 * r + 1, 2 * c + 1)] = y.re;
                }
                let s = self.load_s[r];
                if s != Complex64::new(0.0, 0.0) {
                    if v[r].norm() >= self.cfg.low_voltage_pu {
                        // I = conj(S)/conj(v): derivative with respect to conj(v)
                        let a = -s.conj() / (v[r].conj() * v[r].conj());
                        jac[(2 * r, 2 * r)] += a.re;
                        jac[(2 * r, 2 * r + 1)] += a.im;
                        jac[(2 * r + 1, 2 * r)] += a.im;
                        jac[(2 * r + 1, 2 * r + 1)] -= a.re;
                    } else {
                        let y = s.conj() / (self.cfg.low_voltage_pu * self.cfg.low_voltage_pu);
                        jac[(2 * r, 2 * r)] += y.re;
                        jac[(2 * r, 2 * r + 1)] -= y.im;
                        jac[(2 * r + 1, 2 * r)] += y.im;
                        jac[(2 * r + 1, 2 * r + 1)] += y.re;
                    }
                }
            }
            let dz = jac.lu().solve(&(-f)).ok_or_else(|| Error::NetworkSolve {
                time: self.t,
                message: "singular network Jacobian".into(),
            })?;
            let mut step = 0.0f64;
            for k in 0..n {
                let d = Complex64::new(dz[2 * k], dz[2 * k + 1]);
                v[k] += d;
                step = step.max(d.norm());
            }
            if step <= 1e-13 {
                self.v = v;
                return Ok(());
            }
        }
        Err(Error::NetworkSolve {
            time: self.t,
            message: format!(
                "network equations did not converge in {} iterations",
                self.cfg.newton_max_iter
            ),
        })
    }

    /// State derivatives at `x` (the network is solved first).
    fn derivatives(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        self.solve_network(x)?;
        let mut dx = vec![0.0; x.len()];
        for (m, sp) in self.machines.iter().zip(&self.setpoints) {
            let o = m.offset;
            let (delta, omega, eq_p) = (x[o], x[o + 1], x[o + 2]);
            let vb = self.v[m.bus];
            let e = Complex64::from_polar(eq_p, delta);
            let i = (e - vb) * m.y_m;
            let pe = (e * i.conj()).re * m.scale;
            let id = d_axis_current(i * m.scale, delta);

            let efd = match (&m.avr, m.avr_offset) {
                (Some(avr), Some(ao)) => {
                    let s = AvrState::from_slice(&x[ao..ao + AvrState::LEN]);
                    let (d, efd) = avr.derivatives(vb.norm(), sp.vref, &s);
                    d.write(&mut dx[ao..ao + AvrState::LEN]);
                    efd
                }
                _ => sp.efd0,
            };
            let pm = match (&m.gov, m.gov_offset) {
                (Some(gov), Some(go)) => {
                    let s = GovState::from_slice(&x[go..go + GovState::LEN]);
                    let (d, pm) = gov.derivatives(omega, sp.p_ref, &s);
                    d.write(&mut dx[go..go + GovState::LEN]);
                    pm
                }
                _ => sp.pm0,
            };
            let (d_delta, d_omega) = swing_derivatives(
                m.h,
                m.d_damp,
                self.omega_base,
                omega,
                pm / omega,
                pe / omega,
            );
            dx[o] = d_delta;
            dx[o + 1] = d_omega;
            dx[o + 2] = flux_decay_derivative(m.td0_p, m.xd, m.xd_p, eq_p, efd, id);
        }
        let tf = self.cfg.freq_filter_s;
        for (k, v) in self.v.iter().enumerate() {
            let j = self.freq_offset + k;
            dx[j] = wrap(v.arg() - x[j]) / tf;
        }
        Ok(dx)
    }

    /// Derivatives at a given state without advancing time.
    pub fn derivatives_at(&mut self, state: &DynamicState) -> Result<Vec<f64>> {
        self.load_state(state)?;
        self.derivatives(&state.x)
    }

    fn load_state(&mut self, state: &DynamicState) -> Result<()> {
        if state.x.len() != self.names.len()
            || state.v.len() != self.net.buses().len()
            || state.setpoints.len() != self.machines.len()
        {
            return Err(Error::Precondition(
                "dynamic state does not belong to this network".into(),
            ));
        }
        self.setpoints = state.setpoints.clone();
        self.v = state.v.clone();
        self.t = state.t;
        Ok(())
    }

    fn actions(&self, ev: &Event) -> Vec<(f64, Action)> {
        let net = self.net;
        let sb = net.s_base_mva();
        let y_f = Complex64::new(self.cfg.fault_admittance_pu, 0.0);
        let t0 = ev.t_start;
        match ev.kind {
            EventKind::LoadStep => {
                let l = net.loads().iter().find(|l| l.id == ev.target).unwrap();
                let ds = match ev.fraction {
                    Some(f) => Complex64::new(l.p_mw, l.q_mvar) * f,
                    None => {
                        Complex64::new(ev.delta_p_mw.unwrap_or(0.0), ev.delta_q_mvar.unwrap_or(0.0))
                    }
                } / sb;
                vec![(t0, Action::LoadDelta(net.bus_index(&l.bus).unwrap(), ds))]
            }
            EventKind::BusFault => {
                let k = net.bus_index(&ev.target).unwrap();
                let tc = t0 + ev.clearing_s.unwrap();
                vec![
                    (t0, Action::BusShunt(k, y_f)),
                    (tc, Action::BusShunt(k, -y_f)),
                ]
            }
            EventKind::LineFaultAndTrip => {
                let b = self.branch_index(&ev.target);
                let tc = t0 + ev.clearing_s.unwrap();
                vec![
                    (t0, Action::LineFault(b, ev.location.unwrap())),
                    (tc, Action::LineOut(b)),
                ]
            }
            EventKind::LineTrip => vec![(t0, Action::LineOut(self.branch_index(&ev.target)))],
        }
    }

    fn branch_index(&self, id: &str) -> usize {
        self.net.branches().iter().position(|b| b.id == id).unwrap()
    }

    fn perform(&mut self, a: &Action) {
        match *a {
            Action::LoadDelta(k, ds) => self.load_s[k] += ds,
            Action::BusShunt(k, y) => self.bus_shunt[k] += y,
            Action::LineFault(b, loc) => {
                if self.stamps[b].is_some() {
                    let y_f = Complex64::new(self.cfg.fault_admittance_pu, 0.0);
                    let z = &self.net.branches()[b].impedance;
                    self.stamps[b] = Some(faulted_stamp(z, loc, y_f));
                }
            }
            Action::LineOut(b) => self.stamps[b] = None,
        }
    }

    /// Applies the onset of `ev` immediately (its clearing is not scheduled).
    pub fn apply(&mut self, ev: &Event) -> Result<()> {
        ev.validate(self.net)?;
        if let Some((_, a)) = self.actions(ev).into_iter().next() {
            self.perform(&a);
            self.rebuild_admittance();
        }
        Ok(())
    }

    fn resolve_probe(&self, ch: &ChannelId) -> Result<Probe> {
        let net = self.net;
        let bus_of = |id: &str| {
            net.bus_index(id)
                .ok_or_else(|| Error::UnknownElement(format!("monitored bus '{id}' in '{ch}'")))
        };
        Ok(match ch.quantity {
            Quantity::VmagPu => Probe::Vmag(bus_of(&ch.location)?),
            Quantity::VangRad => Probe::Vang(bus_of(&ch.location)?),
            Quantity::FreqHz => Probe::Freq(bus_of(&ch.location)?),
            Quantity::PMw | Quantity::QMvar => {
                let (element, bus) = ch
                    .flow_parts()
                    .ok_or_else(|| Error::UnknownElement(format!("channel '{ch}'")))?;
                let k = bus_of(bus)?;
                let branches = flow_branches(net, element, bus)?;
                Probe::Flow {
                    bus: k,
                    branches,
                    reactive: ch.quantity == Quantity::QMvar,
                }
            }
        })
    }

    fn sample(&self, p: &Probe, x: &[f64]) -> f64 {
        match *p {
            Probe::Vmag(k) => self.v[k].norm(),
            Probe::Vang(k) => self.v[k].arg(),
            Probe::Freq(k) => {
                let y = wrap(self.v[k].arg() - x[self.freq_offset + k]) / self.cfg.freq_filter_s;
                self.net.f_nominal_hz() * (1.0 + y / self.omega_base)
            }
            Probe::Flow {
                bus,
                ref branches,
                reactive,
            } => {
                let mut s = Complex64::new(0.0, 0.0);
                for &(b, at_from) in branches {
                    if let Some(st) = &self.stamps[b] {
                        let br = &self.net.branches()[b];
                        let i = self.net.bus_index(&br.from).unwrap();
                        let j = self.net.bus_index(&br.to).unwrap();
                        let cur = terminal_current(st, self.v[i], self.v[j], at_from);
                        s += self.v[bus] * cur.conj();
                    }
                }
                let s = s * self.net.s_base_mva();
                if reactive {
                    s.im
                } else {
                    s.re
                }
            }
        }
    }

    fn check_finite(&self, x: &[f64], t: f64) -> Result<()> {
        if let Some(i) = x
            .iter()
            .position(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT)
        {
            return Err(Error::Diverged {
                state: self.names[i].clone(),
                time: t,
            });
        }
        Ok(())
    }

    /// Integrates from `state0` to `t_end`, recording `monitors` every step.
    /// Events snap to the nearest step; a sample is taken after the events
    /// of its step have been applied.
    pub fn run(
        &mut self,
        state0: &DynamicState,
        events: &[Event],
        t_end: f64,
        monitors: &[ChannelId],
    ) -> Result<SignalSet> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::invalid("simulation", "t_end must be positive"));
        }
        if monitors.is_empty() {
            return Err(Error::invalid("simulation", "no monitored channels"));
        }
        for w in events.windows(2) {
            if w[1].t_start < w[0].t_start {
                return Err(Error::invalid(
                    "simulation",
                    "events must be sorted by t_start",
                ));
            }
        }
        for ev in events {
            ev.validate(self.net)?;
        }
        self.load_state(state0)?;
        let probes = monitors
            .iter()
            .map(|c| self.resolve_probe(c))
            .collect::<Result<Vec<_>>>()?;

        let dt = self.cfg.dt;
        let steps = (t_end / dt).round() as usize;
        let mut schedule: Vec<(usize, Action)> = events
            .iter()
            .flat_map(|ev| self.actions(ev))
            .map(|(t, a)| (((t - state0.t) / dt).round().max(0.0) as usize, a))
            .filter(|(k, _)| *k <= steps)
            .collect();
        schedule.sort_by_key(|(k, _)| *k);
        let mut next = 0;

        let mut x = state0.x.clone();
        let mut t_axis = Vec::with_capacity(steps + 1);
        let mut data: Vec<Vec<f64>> = vec![Vec::with_capacity(steps + 1); probes.len()];
        let n = x.len();
        let mut tmp = vec![0.0; n];
        for k in 0..=steps {
            let t = state0.t + k as f64 * dt;
            self.t = t;
            let mut changed = false;
            while next < schedule.len() && schedule[next].0 == k {
                self.perform(&schedule[next].1);
                next += 1;
                changed = true;
            }
            if changed {
                self.rebuild_admittance();
            }
            self.solve_network(&x)?;
            t_axis.push(t);
            for (p, col) in probes.iter().zip(data.iter_mut()) {
                col.push(self.sample(p, &x));
            }
            if k == steps {
                break;
            }

            let k1 = self.derivatives(&x)?;
            for i in 0..n {
                tmp[i] = x[i] + 0.5 * dt * k1[i];
            }
            self.t = t + 0.5 * dt;
            let k2 = self.derivatives(&tmp)?;
            for i in 0..n {
                tmp[i] = x[i] + 0.5 * dt * k2[i];
            }
            let k3 = self.derivatives(&tmp)?;
            for i in 0..n {
                tmp[i] = x[i] + dt * k3[i];
            }
            self.t = t + dt;
            let k4 = self.derivatives(&tmp)?;
            for i in 0..n {
                x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            self.check_finite(&x, t + dt)?;
        }

        let channels: IndexMap<ChannelId, Vec<f64>> = monitors.iter().cloned().zip(data).collect();
        if channels.len() != monitors.len() {
            return Err(Error::invalid("simulation", "duplicate monitored channel"));
        }
        SignalSet::new(dt, t_axis, channels)
    }
}

/// Equilibrium state of `net` at the power-flow point `sol`.
pub fn init_dynamic_state(
    net: &Network,
    sol: &PowerFlowSolution,
    cfg: &SimConfig,
) -> Result<DynamicState> {
    Simulator::new(net, cfg.clone())?.initialize(sol)
}

/// Runs one simulation from `state0`.
pub fn simulate(
    net: &Network,
    state0: &DynamicState,
    events: &[Event],
    t_end: f64,
    monitors: &[ChannelId],
    cfg: &SimConfig,
) -> Result<SignalSet> {
    Simulator::new(net, cfg.clone())?.run(state0, events, t_end, monitors)
}
