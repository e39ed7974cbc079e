//! Mapping between named decision variables and equivalent models.
//!
//! Steady-state names: `<area>.r`, `<area>.x`, `<area>.g_i`, `<area>.b_i`,
//! `<area>.g_j`, `<area>.b_j`, `<area>.s_nom`, `<area>.p_mw`,
//! `<area>.q_mvar`, `common.r`, `common.x`. Impedance values are per unit on
//! the impedance's own `s_base_mva`.
//!
//! Dynamic names: `<area>.h`, `<area>.d_damp`, `<area>.avr.<field>`,
//! `<area>.gov.<field>`,
//! addressing the equivalent machine `GEQ-<area>`.

use indexmap::IndexMap;

use crate::dynamics::{AvrAc5aParams, HydroGovParams};
use crate::error::{Error, Result};
use crate::grid::{equivalent_machine_id, WardEquivalentParams};
use crate::grid::{Impedance, Network};
use crate::optimizer::{Parameter, ParameterSpace};

/// Series impedance assumed for an equivalent when the template gives none.
pub const DEFAULT_SERIES_X_PU: f64 = 0.1;

const SHUNT_FIELDS: [&str; 4] = ["g_i", "b_i", "g_j", "b_j"];

pub fn is_shunt_parameter(name: &str) -> bool {
    name.rsplit_once('.')
        .is_some_and(|(_, f)| SHUNT_FIELDS.contains(&f))
}

fn impedance_field<'a>(z: &'a mut Impedance, field: &str) -> Option<&'a mut f64> {
    Some(match field {
        "r" => &mut z.r,
        "x" => &mut z.x,
        "g_i" => &mut z.g_i,
        "b_i" => &mut z.b_i,
        "g_j" => &mut z.g_j,
        "b_j" => &mut z.b_j,
        _ => return None,
    })
}

fn set_impedance(z: &mut Impedance, field: &str, value: f64) -> bool {
    impedance_field(z, field).map(|f| *f = value).is_some()
}

/// Template with every missing series impedance filled in.
pub fn complete_template(template: &WardEquivalentParams, s_base_mva: f64) -> WardEquivalentParams {
    let mut t = template.clone();
    for a in &mut t.areas {
        a.series
            .get_or_insert_with(|| Impedance::series(s_base_mva, 0.0, DEFAULT_SERIES_X_PU));
    }
    if t.areas.len() == 2 && t.common.is_none() {
        t.common = Some(Impedance::series(
            s_base_mva,
            0.0,
            3.0 * DEFAULT_SERIES_X_PU,
        ));
    }
    t
}

/// Sets one named steady-state parameter.
pub fn set_steady_parameter(p: &mut WardEquivalentParams, name: &str, value: f64) -> Result<()> {
    let unknown = || Error::UnknownElement(format!("steady-state parameter '{name}'"));
    let (owner, field) = name.split_once('.').ok_or_else(unknown)?;
    if owner == "common" {
        let z = p.common.as_mut().ok_or_else(|| {
            Error::invalid(
                format!("parameter '{name}'"),
                "no common impedance in the equivalent",
            )
        })?;
        if field == "r" || field == "x" {
            set_impedance(z, field, value);
            return Ok(());
        }
        return Err(unknown());
    }
    let a = p.area_mut(owner).ok_or_else(unknown)?;
    match field {
        "s_nom" => a.s_nom_mva = value,
        "p_mw" => a.load_p_mw = value,
        "q_mvar" => a.load_q_mvar = value,
        _ => {
            let z = a.series.as_mut().ok_or_else(|| {
                Error::invalid(format!("parameter '{name}'"), "series impedance missing")
            })?;
            if !set_impedance(z, field, value) {
                return Err(unknown());
            }
        }
    }
    Ok(())
}

/// Reads one named steady-state parameter.
pub fn get_steady_parameter(p: &WardEquivalentParams, name: &str) -> Option<f64> {
    let (owner, field) = name.split_once('.')?;
    if owner == "common" {
        let z = p.common?;
        return match field {
            "r" => Some(z.r),
            "x" => Some(z.x),
            _ => None,
        };
    }
    let a = p.area(owner)?;
    match field {
        "s_nom" => Some(a.s_nom_mva),
        "p_mw" => Some(a.load_p_mw),
        "q_mvar" => Some(a.load_q_mvar),
        _ => {
            let z = a.series?;
            Some(match field {
                "r" => z.r,
                "x" => z.x,
                "g_i" => z.g_i,
                "b_i" => z.b_i,
                "g_j" => z.g_j,
                "b_j" => z.b_j,
                _ => return None,
            })
        }
    }
}

/// `template` with the candidate `x` written into the named parameters.
pub fn steady_parameters(
    template: &WardEquivalentParams,
    space: &ParameterSpace,
    x: &[f64],
) -> Result<WardEquivalentParams> {
    let mut p = template.clone();
    for (param, v) in space.params().iter().zip(x) {
        set_steady_parameter(&mut p, &param.name, *v)?;
    }
    Ok(p)
}

/// Zeroes every shunt term of the series impedances.
pub fn freeze_shunts(p: &mut WardEquivalentParams) {
    for a in &mut p.areas {
        if let Some(z) = a.series.as_mut() {
            z.g_i = 0.0;
            z.b_i = 0.0;
            z.g_j = 0.0;
            z.b_j = 0.0;
        }
    }
}

/// Generic stage-1 box, per unit on the system base of `s_base_mva`.
pub fn default_steady_space(
    template: &WardEquivalentParams,
    freeze_shunts: bool,
) -> Result<ParameterSpace> {
    let mut params = Vec::new();
    for a in &template.areas {
        let n = |f: &str| format!("{}.{f}", a.area);
        params.push(Parameter::linear(n("r"), 0.0, 0.1));
        params.push(Parameter::log(n("x"), 1e-3, 1.0));
        if !freeze_shunts {
            for f in SHUNT_FIELDS {
                params.push(Parameter::linear(n(f), -0.5, 0.5));
            }
        }
        params.push(Parameter::log(n("s_nom"), 100.0, 20_000.0));
        params.push(Parameter::linear(n("p_mw"), -2_000.0, 2_000.0));
        params.push(Parameter::linear(n("q_mvar"), -1_000.0, 1_000.0));
    }
    if template.areas.len() == 2 {
        params.push(Parameter::linear("common.r", 0.0, 0.2));
        params.push(Parameter::log("common.x", 1e-2, 2.0));
    }
    ParameterSpace::new(params)
}

fn equivalent_machine_index(net: &Network, area: &str) -> Result<usize> {
    let id = equivalent_machine_id(area);
    net.machines()
        .iter()
        .position(|m| m.id == id)
        .ok_or_else(|| Error::UnknownElement(format!("equivalent machine '{id}'")))
}

/// Writes named dynamic parameters into the equivalent machines of `net`.
pub fn apply_dynamic_values<'a>(
    net: &Network,
    values: impl IntoIterator<Item = (&'a str, f64)>,
) -> Result<Network> {
    let mut doc = net.to_document();
    for (name, v) in values {
        let unknown = || Error::UnknownElement(format!("dynamic parameter '{name}'"));
        let (area, rest) = name.split_once('.').ok_or_else(unknown)?;
        let m = &mut doc.machines[equivalent_machine_index(net, area)?];
        match rest.split_once('.') {
            None if rest == "h" => m.h = v,
            None if rest == "d_damp" => m.d_damp = v,
            Some(("avr", f)) => m.avr.get_or_insert_with(AvrAc5aParams::default).set(f, v)?,
            Some(("gov", f)) => m
                .gov
                .get_or_insert_with(HydroGovParams::default)
                .set(f, v)?,
            _ => return Err(unknown()),
        }
    }
    Network::new(doc)
}

/// Current values of named dynamic parameters in `net`.
pub fn dynamic_values(net: &Network, names: &[&str]) -> Result<IndexMap<String, f64>> {
    names
        .iter()
        .map(|name| {
            let unknown = || Error::UnknownElement(format!("dynamic parameter '{name}'"));
            let (area, rest) = name.split_once('.').ok_or_else(unknown)?;
            let m = &net.machines()[equivalent_machine_index(net, area)?];
            let v = match rest.split_once('.') {
                None if rest == "h" => Some(m.h),
                None if rest == "d_damp" => Some(m.d_damp),
                Some(("avr", f)) => m.avr.as_ref().and_then(|a| a.get(f)),
                Some(("gov", f)) => m.gov.as_ref().and_then(|g| g.get(f)),
                _ => None,
            };
            Ok((name.to_string(), v.ok_or_else(unknown)?))
        })
        .collect()
}

/// Exciter and governor fields searched by default.
pub const DEFAULT_DYNAMIC_AVR_FIELDS: [&str; 5] = ["ka", "ta", "te", "kf", "tf1"];
pub const DEFAULT_DYNAMIC_GOV_FIELDS: [&str; 5] = ["rp", "kp", "ki", "tg", "tw"];

/// One order of magnitude either side of library-typical values, log scale.
pub fn default_dynamic_space(areas: &[String]) -> Result<ParameterSpace> {
    let avr = AvrAc5aParams::default();
    let gov = HydroGovParams::default();
    let decade = |name: String, v: f64| Parameter::log(name, v / 10.0, v * 10.0);
    let mut params = Vec::new();
    for a in areas {
        params.push(decade(format!("{a}.h"), 4.0));
        for f in DEFAULT_DYNAMIC_AVR_FIELDS {
            params.push(decade(format!("{a}.avr.{f}"), avr.get(f).unwrap()));
        }
        for f in DEFAULT_DYNAMIC_GOV_FIELDS {
            params.push(decade(format!("{a}.gov.{f}"), gov.get(f).unwrap()));
        }
    }
    ParameterSpace::new(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AreaEquivalent;

    fn template() -> WardEquivalentParams {
        WardEquivalentParams {
            areas: vec![AreaEquivalent {
                area: "A".into(),
                boundary_bus: "B1".into(),
                series: None,
                s_nom_mva: 1000.0,
                load_p_mw: 0.0,
                load_q_mvar: 0.0,
            }],
            common: None,
        }
    }

    #[test]
    fn steady_names_round_trip() {
        let t = complete_template(&template(), 100.0);
        let space = default_steady_space(&t, false).unwrap();
        let x: Vec<f64> = space
            .params()
            .iter()
            .map(|p| 0.25 * p.lower + 0.75 * p.upper)
            .collect();
        let p = steady_parameters(&t, &space, &x).unwrap();
        for (param, v) in space.params().iter().zip(&x) {
            assert_eq!(
                get_steady_parameter(&p, &param.name),
                Some(*v),
                "{}",
                param.name
            );
        }
    }

    #[test]
    fn unknown_names_rejected() {
        let mut t = complete_template(&template(), 100.0);
        assert!(set_steady_parameter(&mut t, "A.zz", 1.0).is_err());
        assert!(set_steady_parameter(&mut t, "Q.r", 1.0).is_err());
        assert!(set_steady_parameter(&mut t, "common.r", 1.0).is_err());
    }

    #[test]
    fn frozen_space_has_no_shunts() {
        let t = complete_template(&template(), 100.0);
        let s = default_steady_space(&t, true).unwrap();
        assert!(s.names().all(|n| !is_shunt_parameter(n)));
        assert_eq!(s.dim(), 5);
    }
}
