use std::path::Path;

use indexmap::IndexMap;
use proptest::prelude::*;

use ward_ident::dynamics::{
    init_dynamic_state, load_event_script, simulate, ChannelId, Quantity, SignalSet, SimConfig,
};
use ward_ident::pipeline::{boundary_elements, default_monitors};
use ward_ident::pmu::{
    align, format_value, parse_records, read_record_file, render_records, write_records,
};
use ward_ident::steady::solve_power_flow;
use ward_ident::{load_network, Error};

fn data(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn ramp(dt: f64, n: usize, t0: f64, slope: f64) -> SignalSet {
    let t: Vec<f64> = (0..n).map(|k| t0 + k as f64 * dt).collect();
    let mut ch = IndexMap::new();
    ch.insert(
        ChannelId::new("B1", Quantity::FreqHz),
        t.iter().map(|&x| 50.0 + slope * x).collect(),
    );
    SignalSet::new(dt, t, ch).unwrap()
}

#[test]
fn simulated_record_round_trips_byte_for_byte() {
    let net = load_network(&std::fs::read_to_string(data("three_area.json")).unwrap()).unwrap();
    let scenarios =
        load_event_script(&std::fs::read_to_string(data("three_area_events_short.json")).unwrap())
            .unwrap();
    let monitors = default_monitors(&net, &boundary_elements(&net, &["A", "C"]));
    let sol = solve_power_flow(&net, 1e-8, 50).unwrap();
    let cfg = SimConfig::default();
    let s0 = init_dynamic_state(&net, &sol, &cfg).unwrap();
    let s = &scenarios[0];
    let rec = simulate(&net, &s0, &s.events, 2.0, &monitors, &cfg).unwrap();

    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("a.csv");
    write_records(&rec, 50.0, &first).unwrap();
    let back = read_record_file(&first).unwrap();
    assert_eq!(back.f_nominal_hz, 50.0);
    assert_eq!(back.signals.channels().len(), monitors.len());
    for (id, v) in rec.channels() {
        let r = back.signals.channel(id).unwrap();
        for (a, b) in v.iter().zip(r) {
            assert!((a - b).abs() <= 1e-11 * a.abs().max(1.0), "{id}");
        }
    }
    let second = tmp.path().join("b.csv");
    write_records(&back.signals, back.f_nominal_hz, &second).unwrap();
    assert_eq!(
        std::fs::read(&first).unwrap(),
        std::fs::read(&second).unwrap()
    );
}

#[test]
fn malformed_rows_report_their_line() {
    let text = "# pmu-record v1, f_nominal=50, dt=0.01\nt_s,B1:freq_hz\n0,50\n0.01,50\n0.03,50\n";
    match parse_records(text, Path::new("r.csv")) {
        Err(Error::Record { line, .. }) => assert_eq!(line, 5),
        other => panic!("unexpected {other:?}"),
    }
    let text = "# pmu-record v1, f_nominal=50, dt=0.01\nt_s,B1:freq_hz\n0,50\n0.01,abc\n";
    match parse_records(text, Path::new("r.csv")) {
        Err(Error::Record { line, message, .. }) => {
            assert_eq!(line, 4);
            assert!(message.contains("abc"));
        }
        other => panic!("unexpected {other:?}"),
    }
    let text = "# pmu-record v1, f_nominal=50, dt=0.01\nt_s,B1:speed\n0,50\n";
    assert!(matches!(
        parse_records(text, Path::new("r.csv")),
        Err(Error::Record { line: 2, .. })
    ));
}

#[test]
fn align_puts_both_records_on_the_coarse_grid() {
    let fine = ramp(0.01, 501, 0.0, 0.2);
    let coarse = ramp(0.02, 200, 1.0, -0.1);
    let (f, c) = align(&fine, &coarse).unwrap();
    assert_eq!(f.t(), c.t());
    assert_eq!(f.dt(), 0.02);
    assert!((f.start() - 1.0).abs() < 1e-12);
    assert!((f.end() - 4.98).abs() < 1e-9);
    let id = ChannelId::new("B1", Quantity::FreqHz);
    for (t, v) in f.t().iter().zip(f.channel(&id).unwrap()) {
        assert!((v - (50.0 + 0.2 * t)).abs() < 1e-9);
    }
}

#[test]
fn align_rejects_incommensurate_or_disjoint_records() {
    assert!(matches!(
        align(&ramp(0.01, 100, 0.0, 1.0), &ramp(0.015, 100, 0.0, 1.0)),
        Err(Error::Alignment(_))
    ));
    assert!(matches!(
        align(&ramp(0.01, 100, 0.0, 1.0), &ramp(0.01, 100, 5.0, 1.0)),
        Err(Error::Alignment(_))
    ));
}

#[test]
fn rendering_needs_a_channel() {
    let empty = SignalSet::new(0.01, vec![0.0], IndexMap::new()).unwrap();
    assert!(render_records(&empty, 50.0).is_err());
}

proptest! {
    #[test]
    fn canonical_text_is_a_fixed_point(x in proptest::num::f64::NORMAL) {
        let s = format_value(x);
        let back: f64 = s.parse().unwrap();
        prop_assert_eq!(format_value(back), s);
        prop_assert!((back - x).abs() <= 1e-11 * x.abs());
    }
}
