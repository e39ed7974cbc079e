//! Comparison tables and overlay curves.
//!
//! Flow table columns: element, Po, P_new, ΔP, Qo, Q_new, ΔQ (MW / MVAr,
//! two decimals). Short-circuit table columns: bus, Skss, Skss_new, ΔSkss
//! (MVA, one decimal), Ikss, Ikss_new, ΔIkss (kA, three decimals). Values are
//! rounded first and every Δ is the absolute difference of the printed
//! values, so the tables are self-consistent.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::dynamics::{init_dynamic_state, simulate, ChannelId, Quantity, SimConfig};
use crate::error::{Error, Result};
use crate::grid::Network;
use crate::objectives::{
    dynamic_components, steady_components, steady_reference, DynamicComponents, FlowRecord,
    ObjectiveConfig, SteadyComponents,
};
use crate::pmu::{align, format_value};
use crate::steady::{solve_power_flow, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE};

use super::layout;
use super::references::{create_dir, References};

/// `v` rounded to `decimals`, printed without trailing zeros.
pub fn format_rounded(v: f64, decimals: usize) -> String {
    let s = format!("{:.*}", decimals, v);
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

fn rounded(v: f64, decimals: usize) -> f64 {
    format!("{:.*}", decimals, v).parse().unwrap()
}

/// `original, new, |new − original|` after rounding to `decimals`.
fn triple(original: f64, new: f64, decimals: usize) -> [String; 3] {
    let (o, n) = (rounded(original, decimals), rounded(new, decimals));
    [
        format_rounded(o, decimals),
        format_rounded(n, decimals),
        format_rounded((n - o).abs(), decimals),
    ]
}

/// One flow-table row, e.g. `B1-B2, -169.5, -156.61, 12.89, -173.2, -172.25, 0.95`.
pub fn flow_row(label: &str, p_orig: f64, p_new: f64, q_orig: f64, q_new: f64) -> String {
    let p = triple(p_orig, p_new, 2);
    let q = triple(q_orig, q_new, 2);
    format!("{label}, {}, {}", p.join(", "), q.join(", "))
}

/// One short-circuit-table row.
pub fn scc_row(bus: &str, s_orig: f64, s_new: f64, i_orig: f64, i_new: f64) -> String {
    let s = triple(s_orig, s_new, 1);
    let i = triple(i_orig, i_new, 3);
    format!("{bus}, {}, {}", s.join(", "), i.join(", "))
}

pub const FLOW_HEADER: &str = "element, Po, P_new, ΔP, Qo, Q_new, ΔQ";
pub const SCC_HEADER: &str = "bus, Skss, Skss_new, ΔSkss, Ikss, Ikss_new, ΔIkss";

/// Row label of a flow element: the branch id when measured at the
/// branch's from-end, `element@bus` otherwise.
pub fn flow_label(net: &Network, f: &FlowRecord) -> String {
    match net.branch(&f.element) {
        Some(br) if br.from == f.bus => f.element.clone(),
        _ => f.key(),
    }
}

/// Reference and equivalent responses of one channel in one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Overlay {
    pub scenario: String,
    pub channel: ChannelId,
    pub t: Vec<f64>,
    pub reference: Vec<f64>,
    pub equivalent: Vec<f64>,
}

impl Overlay {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,reference,equivalent\n");
        for ((t, r), e) in self.t.iter().zip(&self.reference).zip(&self.equivalent) {
            s.push_str(&format!(
                "{},{},{}\n",
                format_value(*t),
                format_value(*r),
                format_value(*e)
            ));
        }
        s
    }

    pub fn file_name(&self) -> String {
        format!(
            "{}_{}.csv",
            self.channel.location,
            self.channel.quantity.as_str()
        )
    }

    /// Largest deviation from the first sample, reference and equivalent.
    pub fn peak_deviation(&self) -> (f64, f64) {
        let dev = |v: &[f64]| v.iter().map(|x| (x - v[0]).abs()).fold(0.0, f64::max);
        (dev(&self.reference), dev(&self.equivalent))
    }
}

/// Frequency-excursion comparison of one frequency channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NadirComparison {
    pub scenario: String,
    pub channel: String,
    pub reference_hz: f64,
    pub equivalent_hz: f64,
    /// `|equivalent − reference| / reference`.
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentificationReport {
    pub flow_rows: Vec<String>,
    pub scc_rows: Vec<String>,
    /// `(stage, parameter, value)`.
    pub parameters: Vec<(String, String, f64)>,
    pub steady: SteadyComponents,
    pub steady_objective: f64,
    pub dynamic: Option<(DynamicComponents, f64)>,
    pub overlays: Vec<Overlay>,
    pub nadirs: Vec<NadirComparison>,
}

/// Compares the identified networks against the references. `stage2` is
/// optional; without it the report covers the steady-state stage only.
#[allow(clippy::too_many_arguments)]
pub fn build_report(
    refs: &References,
    stage1: &Network,
    stage2: Option<&Network>,
    parameters: Vec<(String, String, f64)>,
    sim: &SimConfig,
    steady_obj: &ObjectiveConfig,
    dynamic_obj: &ObjectiveConfig,
) -> Result<IdentificationReport> {
    let elements: Vec<(String, String)> = refs
        .steady
        .flows
        .iter()
        .map(|f| (f.element.clone(), f.bus.clone()))
        .collect();
    let buses: Vec<String> = refs.steady.scc.iter().map(|s| s.bus.clone()).collect();
    let new = steady_reference(stage1, &elements, &buses, steady_obj.c_factor)?;
    let flow_rows = refs
        .steady
        .flows
        .iter()
        .zip(&new.flows)
        .map(|(o, n)| flow_row(&flow_label(stage1, o), o.p_mw, n.p_mw, o.q_mvar, n.q_mvar))
        .collect();
    let scc_rows = refs
        .steady
        .scc
        .iter()
        .zip(&new.scc)
        .map(|(o, n)| scc_row(&o.bus, o.skss_mva, n.skss_mva, o.ikss_ka, n.ikss_ka))
        .collect();
    let steady = steady_components(stage1, &refs.steady, steady_obj.c_factor)?;
    let steady_objective =
        steady_obj.weights[0] * steady.flow + steady_obj.weights[1] * steady.short_circuit;

    let mut overlays = Vec::new();
    let mut nadirs = Vec::new();
    let mut dynamic = None;
    if let Some(net) = stage2 {
        let sol = solve_power_flow(net, DEFAULT_TOLERANCE, DEFAULT_MAX_ITER)?;
        sol.ensure_converged()?;
        let comps = dynamic_components(net, &sol, &refs.scenarios, sim, dynamic_obj)?;
        dynamic = Some((
            comps,
            dynamic_obj.weights[0] * comps.frequency + dynamic_obj.weights[1] * comps.voltage,
        ));
        let state0 = init_dynamic_state(net, &sol, sim)?;
        for r in &refs.scenarios {
            let monitors: Vec<ChannelId> = r.record.channels().keys().cloned().collect();
            let out = simulate(
                net,
                &state0,
                &r.scenario.events,
                r.scenario.t_end(),
                &monitors,
                sim,
            )?;
            let (rr, oo) = align(&r.record, &out)?;
            for (id, rv) in rr.channels() {
                let ov = Overlay {
                    scenario: r.scenario.name.clone(),
                    channel: id.clone(),
                    t: rr.t().to_vec(),
                    reference: rv.clone(),
                    equivalent: oo.channel(id).unwrap().to_vec(),
                };
                if id.quantity == Quantity::FreqHz {
                    let (a, b) = ov.peak_deviation();
                    nadirs.push(NadirComparison {
                        scenario: ov.scenario.clone(),
                        channel: id.to_string(),
                        reference_hz: a,
                        equivalent_hz: b,
                        relative_error: if a > 0.0 { (b - a).abs() / a } else { 0.0 },
                    });
                }
                overlays.push(ov);
            }
        }
    }
    Ok(IdentificationReport {
        flow_rows,
        scc_rows,
        parameters,
        steady,
        steady_objective,
        dynamic,
        overlays,
        nadirs,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn table(header: &str, rows: &[String]) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(r);
        s.push('\n');
    }
    s
}

/// Writes the report files into `dir` (replacing earlier ones).
pub fn write_report(dir: &Path, report: &IdentificationReport) -> Result<()> {
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    create_dir(dir)?;
    write(
        &dir.join(layout::FLOW_TABLE),
        &table(FLOW_HEADER, &report.flow_rows),
    )?;
    write(
        &dir.join(layout::SCC_TABLE),
        &table(SCC_HEADER, &report.scc_rows),
    )?;

    let params: Vec<String> = report
        .parameters
        .iter()
        .map(|(s, n, v)| format!("{s},{n},{}", format_value(*v)))
        .collect();
    write(
        &dir.join(layout::PARAMETER_TABLE),
        &table("stage,parameter,value", &params),
    )?;

    let mut obj = vec![
        format!("F1,{}", format_value(report.steady_objective)),
        format!("F_PF,{}", format_value(report.steady.flow)),
        format!("F_SHC,{}", format_value(report.steady.short_circuit)),
    ];
    if let Some((c, f)) = &report.dynamic {
        obj.push(format!("F2,{}", format_value(*f)));
        obj.push(format!("f_freq,{}", format_value(c.frequency)));
        obj.push(format!("f_volt,{}", format_value(c.voltage)));
    }
    write(
        &dir.join(layout::OBJECTIVE_TABLE),
        &table("objective,value", &obj),
    )?;

    if !report.nadirs.is_empty() {
        let rows: Vec<String> = report
            .nadirs
            .iter()
            .map(|n| {
                format!(
                    "{},{},{},{},{}",
                    n.scenario,
                    n.channel,
                    format_value(n.reference_hz),
                    format_value(n.equivalent_hz),
                    format_value(n.relative_error)
                )
            })
            .collect();
        write(
            &dir.join(layout::NADIR_TABLE),
            &table(
                "scenario,channel,reference_dev_hz,equivalent_dev_hz,relative_error",
                &rows,
            ),
        )?;
    }
    for ov in &report.overlays {
        let sub = dir.join(layout::OVERLAYS).join(&ov.scenario);
        create_dir(&sub)?;
        write(&sub.join(ov.file_name()), &ov.to_csv())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flow_row_fixture() {
        assert_eq!(
            flow_row("B1-B2", -169.5, -156.61, -173.2, -172.25),
            "B1-B2, -169.5, -156.61, 12.89, -173.2, -172.25, 0.95"
        );
    }

    #[test]
    fn scc_row_fixture() {
        assert_eq!(
            scc_row("B1", 8028.1, 7526.0, 20.152, 18.891),
            "B1, 8028.1, 7526, 502.1, 20.152, 18.891, 1.261"
        );
    }

    #[test]
    fn self_comparison_is_all_zero() {
        assert_eq!(
            flow_row("X", 1.234, 1.234, -0.001, -0.001),
            "X, 1.23, 1.23, 0, 0, 0, 0"
        );
    }
}
