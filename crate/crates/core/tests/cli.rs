use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ward-ident"))
        .args(args)
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn power_flow_prints_voltages() {
    let out = run(&["pf", "--grid", path(&data("three_area.json"))]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("converged in"));
    assert!(text.contains("B3") && text.contains("A2-C2"));
}

#[test]
fn short_circuit_level() {
    let out = run(&[
        "scc",
        "--grid",
        path(&data("three_area.json")),
        "--bus",
        "B1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("Skss ="));
}

#[test]
fn validation_failures_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"s_base_mva": 100, "buses": []}"#).unwrap();
    assert_eq!(run(&["pf", "--grid", path(&bad)]).status.code(), Some(2));
    let out = run(&[
        "scc",
        "--grid",
        path(&data("three_area.json")),
        "--bus",
        "Z9",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("Z9"));
    assert_eq!(
        run(&["pf", "--grid", path(&tmp.path().join("missing.json"))])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn numerical_failures_exit_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let heavy = tmp.path().join("heavy.json");
    std::fs::write(
        &heavy,
        serde_json::json!({
            "s_base_mva": 100.0, "f_nominal_hz": 50.0,
            "buses": [
                {"id": "B1", "base_kv": 230.0, "kind": "slack", "v_set": 1.0},
                {"id": "B2", "base_kv": 230.0, "kind": "pq"}
            ],
            "branches": [{"id": "L12", "from": "B1", "to": "B2",
                "impedance": {"s_base_mva": 100.0, "r": 0.0, "x": 0.1}}],
            "loads": [{"id": "LD2", "bus": "B2", "p_mw": 900.0, "q_mvar": 0.0}]
        })
        .to_string(),
    )
    .unwrap();
    let out = run(&["pf", "--grid", path(&heavy)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("did not converge"));
}

#[test]
fn simulate_writes_one_record_per_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("records");
    let out = run(&[
        "simulate",
        "--grid",
        path(&data("three_area.json")),
        "--events",
        path(&data("three_area_events_short.json")),
        "--out",
        path(&out_dir),
        "--monitor",
        "B1:freq_hz",
        "--monitor",
        "B4-B6@B4:p_mw",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in ["load_step", "line_fault"] {
        let text = std::fs::read_to_string(out_dir.join(format!("{name}.csv"))).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "# pmu-record v1, f_nominal=50, dt=0.01"
        );
        assert_eq!(lines.next().unwrap(), "t_s,B1:freq_hz,B4-B6@B4:p_mw");
    }
}

#[test]
fn dynamic_stage_before_steady_stage_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(data("three_area_roundtrip.json")).unwrap())
            .unwrap();
    v["run_dir"] = serde_json::json!(tmp.path().join("run"));
    for key in ["grid", "events"] {
        let rel = v[key].as_str().unwrap().to_string();
        v[key] = serde_json::json!(data(&rel));
    }
    v["reference"] = serde_json::json!({
        "equivalent": data("known_equivalent.json"),
        "dynamic": data("known_dynamic.json"),
    });
    let cfg = tmp.path().join("config.json");
    std::fs::write(&cfg, v.to_string()).unwrap();
    let out = run(&["ident-dyn", "--config", path(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("steady-state stage first"));
    let out = run(&["report", "--run", path(&tmp.path().join("run"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}
