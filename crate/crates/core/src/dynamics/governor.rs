//! PID speed governor with permanent droop driving a non-linear hydro
//! turbine with water-column inertia.
//!
//! Signal path: speed → measurement lag `tt` → deadband `db1` → PID input
//! `u = rp·(p_ref − p_fb) − Δω` where `p_fb` is mechanical power through the
//! lag `td`; PID `kp + ki/s + kd·s/(1+s·tf)` → pilot servo `tp` → gate servo
//! `tg` with rate limits and position limits `[g_min, g_max]`.
//!
//! Turbine: `dq/dt = (1 − h)/tw`, `h = (q/g)²`, `p_mech = at·h·(q − q_nl)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_at() -> f64 {
    1.1
}

fn default_q_nl() -> f64 {
    0.08
}

fn default_g_max() -> f64 {
    1.0
}

fn default_velocity() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HydroGovParams {
    pub rp: f64,
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub tf: f64,
    pub tg: f64,
    pub tp: f64,
    pub td: f64,
    pub tt: f64,
    pub db1: f64,
    pub tw: f64,
    #[serde(default = "default_at")]
    pub at: f64,
    #[serde(default = "default_q_nl")]
    pub q_nl: f64,
    #[serde(default)]
    pub g_min: f64,
    #[serde(default = "default_g_max")]
    pub g_max: f64,
    /// Maximum gate opening rate, pu/s.
    #[serde(default = "default_velocity")]
    pub vel_open: f64,
    /// Maximum gate closing rate, pu/s.
    #[serde(default = "default_velocity")]
    pub vel_close: f64,
}

impl Default for HydroGovParams {
    fn default() -> Self {
        HydroGovParams {
            rp: 0.05,
            kp: 5.0,
            ki: 1.0,
            kd: 0.0,
            tf: 0.1,
            tg: 0.2,
            tp: 0.05,
            td: 0.1,
            tt: 0.05,
            db1: 0.0,
            tw: 1.0,
            at: default_at(),
            q_nl: default_q_nl(),
            g_min: 0.0,
            g_max: default_g_max(),
            vel_open: default_velocity(),
            vel_close: default_velocity(),
        }
    }
}

pub const GOV_FIELDS: [&str; 17] = [
    "rp",
    "kp",
    "ki",
    "kd",
    "tf",
    "tg",
    "tp",
    "td",
    "tt",
    "db1",
    "tw",
    "at",
    "q_nl",
    "g_min",
    "g_max",
    "vel_open",
    "vel_close",
];

impl HydroGovParams {
    pub fn validate(&self, owner: &str) -> Result<()> {
        let bad = |msg: &str| {
            Err(Error::invalid(
                format!("governor of '{owner}'"),
                msg.to_string(),
            ))
        };
        let all = [
            self.rp,
            self.kp,
            self.ki,
            self.kd,
            self.tf,
            self.tg,
            self.tp,
            self.td,
            self.tt,
            self.db1,
            self.tw,
            self.at,
            self.q_nl,
            self.g_min,
            self.g_max,
            self.vel_open,
            self.vel_close,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("non-finite parameter");
        }
        if self.rp < 0.0 {
            return bad("rp must be non-negative");
        }
        if self.tw <= 0.0 || self.tg <= 0.0 {
            return bad("tw and tg must be positive");
        }
        if self.tf < 0.0 || self.tp < 0.0 || self.td < 0.0 || self.tt < 0.0 || self.db1 < 0.0 {
            return bad("time constants and deadband must be non-negative");
        }
        if self.g_min >= self.g_max {
            return bad("g_min must be below g_max");
        }
        if self.at <= 0.0 || self.vel_open <= 0.0 || self.vel_close <= 0.0 {
            return bad("at and gate velocity limits must be positive");
        }
        Ok(())
    }

    pub fn set(&mut self, field: &str, value: f64) -> Result<()> {
        let slot = match field {
            "rp" => &mut self.rp,
            "kp" => &mut self.kp,
            "ki" => &mut self.ki,
            "kd" => &mut self.kd,
            "tf" => &mut self.tf,
            "tg" => &mut self.tg,
            "tp" => &mut self.tp,
            "td" => &mut self.td,
            "tt" => &mut self.tt,
            "db1" => &mut self.db1,
            "tw" => &mut self.tw,
            "at" => &mut self.at,
            "q_nl" => &mut self.q_nl,
            "g_min" => &mut self.g_min,
            "g_max" => &mut self.g_max,
            "vel_open" => &mut self.vel_open,
            "vel_close" => &mut self.vel_close,
            _ => {
                return Err(Error::UnknownElement(format!(
                    "governor parameter '{field}'"
                )))
            }
        };
        *slot = value;
        Ok(())
    }

    pub fn get(&self, field: &str) -> Option<f64> {
        Some(match field {
            "rp" => self.rp,
            "kp" => self.kp,
            "ki" => self.ki,
            "kd" => self.kd,
            "tf" => self.tf,
            "tg" => self.tg,
            "tp" => self.tp,
            "td" => self.td,
            "tt" => self.tt,
            "db1" => self.db1,
            "tw" => self.tw,
            "at" => self.at,
            "q_nl" => self.q_nl,
            "g_min" => self.g_min,
            "g_max" => self.g_max,
            "vel_open" => self.vel_open,
            "vel_close" => self.vel_close,
            _ => return None,
        })
    }
}

/// No-step deadband: zero inside `±db`, shifted linear outside.
pub fn deadband(x: f64, db: f64) -> f64 {
    if x > db {
        x - db
    } else if x < -db {
        x + db
    } else {
        0.0
    }
}

/// Mechanical power of the turbine for flow `q` and gate `g`.
pub fn turbine_power(p: &HydroGovParams, q: f64, g: f64) -> f64 {
    let h = head(q, g);
    p.at * h * (q - p.q_nl)
}

fn head(q: f64, g: f64) -> f64 {
    let g = g.max(1e-2);
    let r = q / g;
    r * r
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GovState {
    /// Measured speed.
    pub speed_meas: f64,
    /// Filtered power feedback for the droop.
    pub p_fb: f64,
    pub integral: f64,
    /// Derivative filter state.
    pub deriv: f64,
    pub pilot: f64,
    pub gate: f64,
    pub flow: f64,
}

impl GovState {
    pub const LEN: usize = 7;
    pub const NAMES: [&'static str; 7] = [
        "gov.speed_meas",
        "gov.p_fb",
        "gov.integral",
        "gov.deriv",
        "gov.pilot",
        "gov.gate",
        "gov.flow",
    ];

    pub fn from_slice(x: &[f64]) -> Self {
        GovState {
            speed_meas: x[0],
            p_fb: x[1],
            integral: x[2],
            deriv: x[3],
            pilot: x[4],
            gate: x[5],
            flow: x[6],
        }
    }

    pub fn write(&self, x: &mut [f64]) {
        x[0] = self.speed_meas;
        x[1] = self.p_fb;
        x[2] = self.integral;
        x[3] = self.deriv;
        x[4] = self.pilot;
        x[5] = self.gate;
        x[6] = self.flow;
    }
}

#[derive(Debug, Clone)]
pub struct HydroGovernor {
    pub params: HydroGovParams,
    min_lag: f64,
}

impl HydroGovernor {
    pub fn new(params: HydroGovParams, min_lag: f64) -> Self {
        HydroGovernor { params, min_lag }
    }

    /// PID input for the current state and power reference.
    pub fn pid_input(&self, p_ref: f64, s: &GovState) -> f64 {
        let p = &self.params;
        p.rp * (p_ref - s.p_fb) - deadband(s.speed_meas - 1.0, p.db1)
    }

    /// State derivatives and mechanical power (pu on machine rating).
    pub fn derivatives(&self, omega: f64, p_ref: f64, s: &GovState) -> (GovState, f64) {
        let p = &self.params;
        let lag = |t: f64| t.max(self.min_lag);
        let p_mech = turbine_power(p, s.flow, s.gate);

        let d_meas = (omega - s.speed_meas) / lag(p.tt);
        let d_pfb = (p_mech - s.p_fb) / lag(p.td);
        let u = self.pid_input(p_ref, s);
        let tf = lag(p.tf);
        let d_deriv = (u - s.deriv) / tf;
        let command = p.kp * u + s.integral + p.kd * d_deriv;
        let d_int = p.ki * u;
        let d_pilot = (command - s.pilot) / lag(p.tp);

        let mut d_gate = ((s.pilot - s.gate) / lag(p.tg)).clamp(-p.vel_close, p.vel_open);
        if (s.gate >= p.g_max && d_gate > 0.0) || (s.gate <= p.g_min && d_gate < 0.0) {
            d_gate = 0.0;
        }
        let d_flow = (1.0 - head(s.flow, s.gate)) / p.tw;

        (
            GovState {
                speed_meas: d_meas,
                p_fb: d_pfb,
                integral: d_int,
                deriv: d_deriv,
                pilot: d_pilot,
                gate: d_gate,
                flow: d_flow,
            },
            p_mech,
        )
    }

    /// Steady state delivering `p_mech0` at synchronous speed; returns state and `p_ref`.
    pub fn initialize(&self, machine: &str, p_mech0: f64) -> Result<(GovState, f64)> {
        let p = &self.params;
        let g0 = p_mech0 / p.at + p.q_nl;
        if g0 > p.g_max || g0 < p.g_min {
            return Err(Error::Initialization {
                machine: machine.to_string(),
                message: format!(
                    "dispatch {p_mech0:.4} pu needs gate {g0:.4} outside [{}, {}]",
                    p.g_min, p.g_max
                ),
            });
        }
        let state = GovState {
            speed_meas: 1.0,
            p_fb: p_mech0,
            integral: g0,
            deriv: 0.0,
            pilot: g0,
            gate: g0,
            flow: g0,
        };
        Ok((state, p_mech0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gov() -> HydroGovernor {
        HydroGovernor::new(HydroGovParams::default(), 0.005)
    }

    #[test]
    fn steady_state_is_fixed_point() {
        let g = gov();
        let (s, p_ref) = g.initialize("G", 0.7).unwrap();
        let (d, pm) = g.derivatives(1.0, p_ref, &s);
        assert!((pm - 0.7).abs() < 1e-12);
        for v in [
            d.speed_meas,
            d.p_fb,
            d.integral,
            d.deriv,
            d.pilot,
            d.gate,
            d.flow,
        ] {
            assert!(v.abs() < 1e-12, "{d:?}");
        }
    }

    #[test]
    fn gate_step_gives_inverse_power_response() {
        let g = gov();
        let (mut s, _) = g.initialize("G", 0.7).unwrap();
        let p0 = turbine_power(&g.params, s.flow, s.gate);
        s.gate += 0.05;
        let p_after = turbine_power(&g.params, s.flow, s.gate);
        assert!(p_after < p0);
        // water then accelerates
        let (d, _) = g.derivatives(1.0, 0.7, &s);
        assert!(d.flow > 0.0);
    }

    #[test]
    fn speed_error_inside_deadband_is_ignored() {
        let mut p = HydroGovParams::default();
        p.db1 = 1e-3;
        let g = HydroGovernor::new(p, 0.005);
        let (mut s, p_ref) = g.initialize("G", 0.5).unwrap();
        s.speed_meas = 1.0 + 5e-4;
        assert_eq!(g.pid_input(p_ref, &s), 0.0);
        s.speed_meas = 1.0 + 2e-3;
        assert!((g.pid_input(p_ref, &s) + 1e-3).abs() < 1e-15);
    }

    #[test]
    fn dispatch_above_gate_limit_fails() {
        let err = gov().initialize("G7", 1.5).unwrap_err();
        assert!(err.to_string().contains("G7"));
    }

    #[test]
    fn deadband_shape() {
        assert_eq!(deadband(0.5, 1.0), 0.0);
        assert_eq!(deadband(2.0, 1.0), 1.0);
        assert_eq!(deadband(-2.0, 1.0), -1.0);
        assert_eq!(deadband(0.3, 0.0), 0.3);
    }
}
