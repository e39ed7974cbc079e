//! IEEE AC5A brushless exciter.
//!
//! Blocks: regulator `Ka/(1+sTa)` with non-windup limits `[vr_min, vr_max]`,
//! exciter `1/(sTe)` with feedback `(Ke + Se(Efd))·Efd`, and rate feedback
//! `s·Kf·(1+sTf3) / ((1+sTf1)(1+sTf2))` taken from Efd.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AvrAc5aParams {
    pub ka: f64,
    pub ta: f64,
    pub te: f64,
    pub ke: f64,
    pub efd1: f64,
    pub se_efd1: f64,
    pub efd2: f64,
    pub se_efd2: f64,
    pub kf: f64,
    pub tf1: f64,
    pub tf2: f64,
    pub tf3: f64,
    pub vr_max: f64,
    pub vr_min: f64,
}

impl Default for AvrAc5aParams {
    fn default() -> Self {
        AvrAc5aParams {
            ka: 400.0,
            ta: 0.02,
            te: 0.8,
            ke: 1.0,
            efd1: 5.6,
            se_efd1: 0.86,
            efd2: 4.2,
            se_efd2: 0.5,
            kf: 0.03,
            tf1: 1.0,
            tf2: 0.0,
            tf3: 0.0,
            vr_max: 7.3,
            vr_min: -7.3,
        }
    }
}

pub const AVR_FIELDS: [&str; 14] = [
    "ka", "ta", "te", "ke", "efd1", "se_efd1", "efd2", "se_efd2", "kf", "tf1", "tf2", "tf3",
    "vr_max", "vr_min",
];

impl AvrAc5aParams {
    pub fn validate(&self, owner: &str) -> Result<()> {
        let bad = |msg: &str| Err(Error::invalid(format!("AVR of '{owner}'"), msg.to_string()));
        let all = [
            self.ka,
            self.ta,
            self.te,
            self.ke,
            self.efd1,
            self.se_efd1,
            self.efd2,
            self.se_efd2,
            self.kf,
            self.tf1,
            self.tf2,
            self.tf3,
            self.vr_max,
            self.vr_min,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("non-finite parameter");
        }
        if self.ta <= 0.0 || self.te <= 0.0 || self.tf1 <= 0.0 {
            return bad("ta, te and tf1 must be positive");
        }
        if self.tf2 < 0.0 || self.tf3 < 0.0 {
            return bad("tf2 and tf3 must be non-negative");
        }
        if self.efd1 == self.efd2 {
            return bad("efd1 and efd2 must differ");
        }
        if self.se_efd1 < 0.0 || self.se_efd2 < 0.0 {
            return bad("saturation values must be non-negative");
        }
        if self.vr_min >= self.vr_max {
            return bad("vr_min must be below vr_max");
        }
        if self.ka <= 0.0 {
            return bad("ka must be positive");
        }
        self.saturation()
            .map(|_| ())
            .map_err(|msg| Error::invalid(format!("AVR of '{owner}'"), msg))
    }

    /// Fits `Se(Efd)·Efd = b·(Efd − a)²` through both anchor points.
    pub fn saturation(&self) -> std::result::Result<Saturation, String> {
        Saturation::fit((self.efd1, self.se_efd1), (self.efd2, self.se_efd2))
    }

    pub fn set(&mut self, field: &str, value: f64) -> Result<()> {
        let slot = match field {
            "ka" => &mut self.ka,
            "ta" => &mut self.ta,
            "te" => &mut self.te,
            "ke" => &mut self.ke,
            "efd1" => &mut self.efd1,
            "se_efd1" => &mut self.se_efd1,
            "efd2" => &mut self.efd2,
            "se_efd2" => &mut self.se_efd2,
            "kf" => &mut self.kf,
            "tf1" => &mut self.tf1,
            "tf2" => &mut self.tf2,
            "tf3" => &mut self.tf3,
            "vr_max" => &mut self.vr_max,
            "vr_min" => &mut self.vr_min,
            _ => return Err(Error::UnknownElement(format!("AVR parameter '{field}'"))),
        };
        *slot = value;
        Ok(())
    }

    pub fn get(&self, field: &str) -> Option<f64> {
        Some(match field {
            "ka" => self.ka,
            "ta" => self.ta,
            "te" => self.te,
            "ke" => self.ke,
            "efd1" => self.efd1,
            "se_efd1" => self.se_efd1,
            "efd2" => self.efd2,
            "se_efd2" => self.se_efd2,
            "kf" => self.kf,
            "tf1" => self.tf1,
            "tf2" => self.tf2,
            "tf3" => self.tf3,
            "vr_max" => self.vr_max,
            "vr_min" => self.vr_min,
            _ => return None,
        })
    }
}

/// Quadratic exciter saturation `Se(Efd)·Efd = b·max(Efd − a, 0)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Saturation {
    pub a: f64,
    pub b: f64,
}

impl Saturation {
    pub fn fit(p1: (f64, f64), p2: (f64, f64)) -> std::result::Result<Saturation, String> {
        let (lo, hi) = if p1.0 < p2.0 { (p1, p2) } else { (p2, p1) };
        let v_lo = lo.0 * lo.1;
        let v_hi = hi.0 * hi.1;
        if v_hi == 0.0 && v_lo == 0.0 {
            return Ok(Saturation { a: 0.0, b: 0.0 });
        }
        if lo.0 <= 0.0 {
            return Err("saturation anchors must be at positive Efd".into());
        }
        if v_hi <= v_lo {
            return Err("saturation anchors must give Se·Efd increasing with Efd".into());
        }
        if v_lo == 0.0 {
            let a = lo.0;
            return Ok(Saturation {
                a,
                b: v_hi / (hi.0 - a).powi(2),
            });
        }
        let r = (v_hi / v_lo).sqrt();
        let a = (r * lo.0 - hi.0) / (r - 1.0);
        let b = v_hi / (hi.0 - a).powi(2);
        Ok(Saturation { a, b })
    }

    /// `Se(Efd)·Efd`, the extra exciter feedback due to saturation.
    pub fn product(&self, efd: f64) -> f64 {
        let d = (efd - self.a).max(0.0);
        self.b * d * d
    }

    pub fn se(&self, efd: f64) -> f64 {
        if efd <= 0.0 {
            0.0
        } else {
            self.product(efd) / efd
        }
    }
}

/// AC5A states: regulator output, field voltage, two rate-feedback states.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AvrState {
    pub vr: f64,
    pub efd: f64,
    pub xf1: f64,
    pub xf2: f64,
}

impl AvrState {
    pub const LEN: usize = 4;
    pub const NAMES: [&'static str; 4] = ["avr.vr", "avr.efd", "avr.xf1", "avr.xf2"];

    pub fn from_slice(x: &[f64]) -> Self {
        AvrState {
            vr: x[0],
            efd: x[1],
            xf1: x[2],
            xf2: x[3],
        }
    }

    pub fn write(&self, x: &mut [f64]) {
        x[0] = self.vr;
        x[1] = self.efd;
        x[2] = self.xf1;
        x[3] = self.xf2;
    }
}

/// Exciter with its saturation curve fitted once.
#[derive(Debug, Clone)]
pub struct Ac5a {
    pub params: AvrAc5aParams,
    sat: Saturation,
    /// Time constants shorter than this are raised to it (integration floor).
    min_lag: f64,
}

impl Ac5a {
    pub fn new(params: AvrAc5aParams, min_lag: f64) -> Result<Self> {
        let sat = params.saturation().map_err(|m| Error::invalid("AVR", m))?;
        Ok(Ac5a {
            params,
            sat,
            min_lag,
        })
    }

    pub fn saturation(&self) -> Saturation {
        self.sat
    }

    fn rate_feedback(&self, s: &AvrState) -> (f64, f64, f64) {
        let p = &self.params;
        let tf1 = p.tf1.max(self.min_lag);
        let tf2 = p.tf2.max(self.min_lag);
        let d_xf1 = (s.efd - s.xf1) / tf1;
        let y1 = p.kf * d_xf1;
        let d_xf2 = (y1 - s.xf2) / tf2;
        let vf = s.xf2 + p.tf3 / tf2 * (y1 - s.xf2);
        (vf, d_xf1, d_xf2)
    }

    /// State derivatives for terminal voltage `vt` and reference `vref`.
    /// Returns the derivatives and the field voltage applied to the machine.
    pub fn derivatives(&self, vt: f64, vref: f64, s: &AvrState) -> (AvrState, f64) {
        let p = &self.params;
        let (vf, d_xf1, d_xf2) = self.rate_feedback(s);
        let err = vref - vt - vf;
        let ta = p.ta.max(self.min_lag);
        let mut d_vr = (p.ka * err - s.vr) / ta;
        if (s.vr >= p.vr_max && d_vr > 0.0) || (s.vr <= p.vr_min && d_vr < 0.0) {
            d_vr = 0.0;
        }
        let vr = s.vr.clamp(p.vr_min, p.vr_max);
        let vfe = p.ke * s.efd + self.sat.product(s.efd);
        let d_efd = (vr - vfe) / p.te.max(self.min_lag);
        (
            AvrState {
                vr: d_vr,
                efd: d_efd,
                xf1: d_xf1,
                xf2: d_xf2,
            },
            s.efd,
        )
    }

    /// Equilibrium holding `efd0` at terminal voltage `vt`; returns the state and `vref`.
    pub fn initialize(&self, machine: &str, vt: f64, efd0: f64) -> Result<(AvrState, f64)> {
        let p = &self.params;
        let vr0 = p.ke * efd0 + self.sat.product(efd0);
        if vr0 > p.vr_max || vr0 < p.vr_min {
            return Err(Error::Initialization {
                machine: machine.to_string(),
                message: format!(
                    "required regulator output {vr0:.4} outside AVR limits [{}, {}]",
                    p.vr_min, p.vr_max
                ),
            });
        }
        let state = AvrState {
            vr: vr0,
            efd: efd0,
            xf1: efd0,
            xf2: 0.0,
        };
        Ok((state, vt + vr0 / p.ka))
    }
}
