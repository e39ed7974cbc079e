use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use ward_ident::dynamics::SimConfig;
use ward_ident::objectives::ObjectiveConfig;
use ward_ident::pipeline::{
    build_report, layout, read_references, run_dynamic_stage, run_report, run_steady_stage,
    PipelineConfig,
};
use ward_ident::Error;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

/// Round-trip configuration with absolute paths, a run directory under
/// `dir`, small search budgets and `edit` applied on top.
fn config(dir: &Path, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v: Value =
        serde_json::from_str(&std::fs::read_to_string(data("three_area_roundtrip.json")).unwrap())
            .unwrap();
    v["run_dir"] = json!(dir.join("run"));
    v["grid"] = json!(data("three_area.json"));
    v["events"] = json!(data("three_area_events_short.json"));
    v["reference"] = json!({
        "equivalent": data("known_equivalent.json"),
        "dynamic": data("known_dynamic.json"),
    });
    v["steady"]["optimizer"] = json!({"algorithm": "pso", "population": 20, "max_iter": 60});
    v["dynamic"]["optimizer"] = json!({"algorithm": "de", "population": 4, "max_iter": 1});
    edit(&mut v);
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path
}

fn load(path: &Path) -> PipelineConfig {
    PipelineConfig::load(path).unwrap()
}

#[test]
fn dynamic_stage_needs_stage_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = load(&config(tmp.path(), |_| {}));
    match run_dynamic_stage(&cfg) {
        Err(Error::Precondition(msg)) => assert!(msg.contains("steady-state stage")),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn inverted_bounds_rejected_at_load() {
    let tmp = tempfile::tempdir().unwrap();
    let path = config(tmp.path(), |v| {
        v["steady"]["space"][0] = json!({"name": "A.r", "lower": 0.1, "upper": 0.0});
    });
    let err = PipelineConfig::load(&path).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("A.r"), "{err}");
}

#[test]
fn unknown_parameter_name_rejected_before_search() {
    let tmp = tempfile::tempdir().unwrap();
    let path = config(tmp.path(), |v| {
        v["steady"]["space"][0] = json!({"name": "A.bogus", "lower": 0.0, "upper": 1.0});
    });
    let err = run_steady_stage(&load(&path)).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(!tmp.path().join("run").join(layout::STAGE1).exists());
}

#[test]
fn infeasible_box_is_diagnosed() {
    let tmp = tempfile::tempdir().unwrap();
    let path = config(tmp.path(), |v| {
        v["steady"]["space"][3] = json!({"name": "A.p_mw", "lower": 50000.0, "upper": 60000.0});
        v["steady"]["optimizer"] = json!({"algorithm": "de", "population": 6, "max_iter": 2});
    });
    match run_steady_stage(&load(&path)) {
        Err(e @ Error::Infeasible { .. }) => assert_eq!(e.exit_code(), 3),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn steady_best_is_elitist_and_persisted() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = load(&config(tmp.path(), |_| {}));
    let out = run_steady_stage(&cfg).unwrap();
    for h in &out.result.history {
        assert!(out.objective <= h.best_objective);
    }
    let stage1 = cfg.run_dir.join(layout::STAGE1);
    for f in [
        layout::PARAMS,
        layout::NETWORK,
        layout::HISTORY,
        layout::SUMMARY,
    ] {
        assert!(stage1.join(f).exists(), "{f}");
    }
    let history = std::fs::read_to_string(stage1.join(layout::HISTORY)).unwrap();
    assert_eq!(history.lines().count(), out.result.history.len() + 1);
}

#[test]
fn dynamic_stage_leaves_stage_one_untouched() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = load(&config(tmp.path(), |_| {}));
    run_steady_stage(&cfg).unwrap();
    let stage1 = cfg.run_dir.join(layout::STAGE1);
    let snapshot = |d: &Path| -> Vec<Vec<u8>> {
        [
            layout::PARAMS,
            layout::NETWORK,
            layout::HISTORY,
            layout::SUMMARY,
        ]
        .iter()
        .map(|f| std::fs::read(d.join(f)).unwrap())
        .collect()
    };
    let before = snapshot(&stage1);
    let out = run_dynamic_stage(&cfg).unwrap();
    assert_eq!(before, snapshot(&stage1));

    // everything but the identified dynamic fields equals the stage-1 network
    let s1: Value =
        serde_json::from_slice(&std::fs::read(stage1.join(layout::NETWORK)).unwrap()).unwrap();
    let s2: Value = serde_json::from_str(&out.network.to_json()).unwrap();
    for key in ["buses", "branches", "loads", "areas"] {
        assert_eq!(s1[key], s2[key], "{key}");
    }
    let strip = |m: &Value| {
        let mut m = m.clone();
        for k in ["h", "avr", "gov"] {
            m.as_object_mut().unwrap().remove(k);
        }
        m
    };
    let m1: Vec<Value> = s1["machines"]
        .as_array()
        .unwrap()
        .iter()
        .map(strip)
        .collect();
    let m2: Vec<Value> = s2["machines"]
        .as_array()
        .unwrap()
        .iter()
        .map(strip)
        .collect();
    assert_eq!(m1, m2);
}

#[test]
fn report_of_reference_against_itself_is_all_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = load(&config(tmp.path(), |_| {}));
    run_steady_stage(&cfg).unwrap();
    let refs = read_references(&cfg.run_dir).unwrap();
    let truth = cfg.reference_network(&cfg.load_grid().unwrap()).unwrap();
    let rep = build_report(
        &refs,
        &truth,
        Some(&truth),
        Vec::new(),
        &SimConfig::default(),
        &ObjectiveConfig::steady_default(),
        &ObjectiveConfig::dynamic_default(),
    )
    .unwrap();
    for row in rep.flow_rows.iter().chain(&rep.scc_rows) {
        let cols: Vec<&str> = row.split(", ").collect();
        assert_eq!(cols[3], "0", "{row}");
        assert_eq!(cols[6], "0", "{row}");
    }
    // persisted records carry 12 significant digits, so the objectives
    // are zero only up to that rounding
    assert!(rep.steady_objective <= 1e-24, "{}", rep.steady_objective);
    assert!(rep.dynamic.unwrap().1 <= 1e-18, "{:?}", rep.dynamic);
    assert!(rep.nadirs.iter().all(|n| n.relative_error <= 1e-9));
    for ov in &rep.overlays {
        for (r, e) in ov.reference.iter().zip(&ov.equivalent) {
            assert!((r - e).abs() <= 1e-10 * r.abs().max(1.0));
        }
    }
}

#[test]
fn report_deltas_recompute_from_printed_values() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = load(&config(tmp.path(), |v| {
        v["steady"]["optimizer"] = json!({"algorithm": "de", "population": 8, "max_iter": 5});
    }));
    run_steady_stage(&cfg).unwrap();
    let rep = run_report(&cfg.run_dir).unwrap();
    assert!(rep.dynamic.is_none());
    let dir = cfg.run_dir.join(layout::REPORT);
    for (file, decimals) in [(layout::FLOW_TABLE, [2, 2]), (layout::SCC_TABLE, [1, 3])] {
        let text = std::fs::read_to_string(dir.join(file)).unwrap();
        let mut lines = text.lines();
        assert!(lines
            .next()
            .unwrap()
            .starts_with(if file == layout::FLOW_TABLE {
                "element, Po, P_new, ΔP, Qo, Q_new, ΔQ"
            } else {
                "bus, Skss, Skss_new, ΔSkss, Ikss, Ikss_new, ΔIkss"
            }));
        let mut rows = 0;
        for line in lines {
            let c: Vec<f64> = line
                .split(", ")
                .skip(1)
                .map(|s| s.parse().unwrap())
                .collect();
            for (k, d) in decimals.iter().enumerate() {
                let (o, n, delta) = (c[3 * k], c[3 * k + 1], c[3 * k + 2]);
                let scale = 10f64.powi(*d);
                assert_eq!(
                    ((n - o).abs() * scale).round(),
                    (delta * scale).round(),
                    "{line}"
                );
            }
            rows += 1;
        }
        assert!(rows > 0);
    }
    assert!(!dir.join(layout::OVERLAYS).exists());
}

#[test]
fn steady_stage_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let dir = tmp.path().join(format!("r{k}"));
        std::fs::create_dir_all(&dir).unwrap();
        let cfg = load(&config(&dir, |_| {}));
        run_steady_stage(&cfg).unwrap();
        let stage1 = cfg.run_dir.join(layout::STAGE1);
        outputs.push(
            [layout::PARAMS, layout::HISTORY, layout::SUMMARY]
                .map(|f| std::fs::read(stage1.join(f)).unwrap()),
        );
    }
    assert_eq!(outputs[0], outputs[1]);
}
