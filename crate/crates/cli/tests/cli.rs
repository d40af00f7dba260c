use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn stochorder(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stochorder")).args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> String {
    fixtures().join(name).to_string_lossy().into_owned()
}

fn report(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn write_problem(dir: &Path, name: &str, kind: &str, payload: Value) -> String {
    let path = dir.join(name);
    let doc = json!({ "schema_version": "1", "problem_kind": kind, "payload": payload, "output": { "csv": true } });
    std::fs::write(&path, doc.to_string()).unwrap();
    path.to_string_lossy().into_owned()
}

fn diagnostic(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().last().expect("diagnostic line")).expect("diagnostic is JSON")
}

#[test]
fn privacy_fixture_value_and_csv() {
    let r = report(&stochorder(&["envelope", &fixture("privacy_doctor.json")]));
    assert_eq!(r["grid_points"], 66);
    assert!((r["value"].as_f64().unwrap() - 0.75).abs() < 1e-9);
    let csv = r["csv"].as_str().unwrap();
    assert!(csv.starts_with("x0,x1,x2,f,fbar,gap"));
    assert_eq!(csv.lines().count(), 66 + 1);
}

#[test]
fn binary_persuasion_fixture() {
    let r = report(&stochorder(&["design", &fixture("kg_binary.json")]));
    assert!((r["value"].as_f64().unwrap() - 0.6).abs() < 1e-9);
    let post = r["posterior"].as_array().unwrap();
    assert!((post[0].as_f64().unwrap() - 0.4).abs() < 1e-9);
    assert!((post[5].as_f64().unwrap() - 0.6).abs() < 1e-9);
}

#[test]
fn out_flag_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("spread.json");
    let o = stochorder(&["expose", &fixture("mps_spread.json"), "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r["kind"], "expose");
    assert_eq!(r["contact_set"], json!([0, 4]));
    let csv = std::fs::read_to_string(out.with_extension("csv")).unwrap();
    assert_eq!(csv.lines().count(), 5 + 1);
}

#[test]
fn csv_rows_match_grid_size() {
    for (cmd, name) in [
        ("expose", "lsd_staircase.json"),
        ("expose", "lsd_staircase_2d.json"),
        ("expose", "mps_simplex_2d.json"),
        ("envelope", "privacy_doctor.json"),
    ] {
        let r = report(&stochorder(&[cmd, &fixture(name)]));
        let n = r["grid_points"].as_u64().unwrap() as usize;
        assert_eq!(r["csv"].as_str().unwrap().lines().count(), n + 1, "{name}");
    }
}

#[test]
fn reports_parse_back_and_carry_their_kind() {
    let cases = [
        ("updating", "grether_gap.json"),
        ("stackelberg", "option_to_own.json"),
        ("stackelberg", "robust_persuasion.json"),
        ("stackelberg", "sequential_persuasion.json"),
        ("design", "prop4_privacy.json"),
    ];
    for (cmd, name) in cases {
        let o = stochorder(&[cmd, &fixture(name)]);
        let r = report(&o);
        assert_eq!(r["kind"], cmd);
        let again: Value = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(again, r);
    }
    let r = report(&stochorder(&["updating", &fixture("grether_gap.json")]));
    assert_eq!(r["divisibility"]["divisible"], false);
    assert!(r["gap_search"]["max_gap"].as_f64().unwrap() >= 1e-4);
    let r = report(&stochorder(&["stackelberg", &fixture("option_to_own.json")]));
    assert_eq!(r["mu_extreme"], true);
}

#[test]
fn malformed_payload_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_problem(dir.path(), "bad.json", "envelope", json!({ "grid": { "interval": { "lo": 0, "hi": 1 } } }));
    let o = stochorder(&["envelope", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    let d = diagnostic(&o);
    assert_eq!(d["error"], "ValidationError");
    assert_eq!(d["exit_code"], 2);

    let path = dir.path().join("version.json");
    std::fs::write(&path, r#"{"schema_version": "9", "problem_kind": "solve", "payload": {}}"#).unwrap();
    assert_eq!(stochorder(&["solve", path.to_str().unwrap()]).status.code(), Some(2));
    std::fs::write(&path, "{ not json").unwrap();
    assert_eq!(stochorder(&["solve", path.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(stochorder(&["solve", "/nonexistent/problem.json"]).status.code(), Some(2));
}

#[test]
fn kind_mismatch_and_invalid_inputs_exit_2() {
    assert_eq!(stochorder(&["solve", &fixture("kg_binary.json")]).status.code(), Some(2));
    assert_eq!(stochorder(&["expose", &fixture("not_exposable.json")]).status.code(), Some(2));
    let o = stochorder(&["updating", &fixture("grether_gap.json"), "--exact"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(diagnostic(&o)["error"], "UnsupportedError");
    let dir = tempfile::tempdir().unwrap();
    let p = write_problem(
        dir.path(),
        "mu.json",
        "solve",
        json!({ "grid": { "interval": { "lo": 0, "hi": 1, "n": 3 } }, "cone": { "kind": "concave" }, "f": [0, 1, 0], "mu": [0.5, 0.6, 0.1] }),
    );
    assert_eq!(stochorder(&["solve", &p]).status.code(), Some(2));
}

#[test]
fn verify_on_empty_fixture_dir_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = stochorder(&["verify", "all", "--fixtures", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(diagnostic(&o)["exit_code"], 2);
    let o = stochorder(&["verify", "nonsense", "--fixtures", &fixtures().to_string_lossy()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_suites_pass_on_bundled_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    for suite in ["exposed", "stackelberg", "updating", "blackwell"] {
        let out = dir.path().join(format!("{suite}.json"));
        let o = stochorder(&["verify", suite, "--fixtures", &fixtures().to_string_lossy(), "--out", out.to_str().unwrap()]);
        let text = String::from_utf8_lossy(&o.stdout);
        assert_eq!(o.status.code(), Some(0), "{text}");
        assert!(text.contains("all checks passed"));
        let r: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(r["passed"], true);
    }
}

#[test]
fn exact_and_float_solve_agree() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_problem(
        dir.path(),
        "solve.json",
        "solve",
        json!({
            "grid": { "points": [[0.0], [0.1], [0.4], [0.5], [1.0]] },
            "cone": { "kind": "increasing_concave" },
            "f": [0.3, -1.0, 2.0, 0.0, 0.5],
            "mu": [0.1, 0.2, 0.3, 0.2, 0.2]
        }),
    );
    let a = report(&stochorder(&["solve", &p]));
    let b = report(&stochorder(&["solve", &p, "--exact"]));
    assert_eq!(b["exact"], true);
    assert!((a["value"].as_f64().unwrap() - b["value"].as_f64().unwrap()).abs() < 1e-9);
    assert_eq!(b["duality_gap"].as_f64().unwrap(), 0.0);
    assert_eq!(a["csv"].as_str().unwrap().lines().count(), 6);
}

#[test]
fn coupling_reports_status() {
    let dir = tempfile::tempdir().unwrap();
    let grid = json!({ "interval": { "lo": 0, "hi": 1, "n": 3 } });
    let found = write_problem(
        dir.path(),
        "found.json",
        "couple",
        json!({ "grid": grid, "cone": { "kind": "concave" }, "mu": { "index": 1 }, "nu": [0.5, 0.0, 0.5] }),
    );
    let r = report(&stochorder(&["couple", &found]));
    assert_eq!(r["status"], "found");
    assert_eq!(r["kernel"][1], json!([0.5, 0.0, 0.5]));
    let none = write_problem(
        dir.path(),
        "none.json",
        "couple",
        json!({ "grid": grid, "cone": { "kind": "concave" }, "mu": [0.5, 0.0, 0.5], "nu": { "index": 1 } }),
    );
    let r = report(&stochorder(&["couple", &none]));
    assert_eq!(r["status"], "no_coupling");
    assert!(r["farkas"].is_array());
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_problem(
        dir.path(),
        "bw.json",
        "blackwell",
        json!({
            "grid": { "simplex": { "states": 3, "k": 4 } },
            "cone": { "kind": "partition_concave", "slice_coordinate": 0, "negated": true },
            "family": { "kind": "privacy", "slice_coordinate": 0 },
            "samples": 8
        }),
    );
    let run = |seed: &str| stochorder(&["blackwell", &p, "--seed", seed]).stdout;
    let first = run("7");
    assert_eq!(first, run("7"));
    let r: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(r["consistent"], true);
    let g = stochorder(&["updating", &fixture("grether_gap.json"), "--seed", "3"]).stdout;
    assert_eq!(g, stochorder(&["updating", &fixture("grether_gap.json"), "--seed", "3"]).stdout);
}

#[test]
fn grid_resolution_overrides_fixture_grids() {
    let r = report(&stochorder(&["design", &fixture("kg_binary.json"), "--grid-resolution", "20"]));
    assert_eq!(r["grid_points"], 21);
    assert!((r["value"].as_f64().unwrap() - 0.6).abs() < 1e-9);
    assert_eq!(stochorder(&["expose", &fixture("lsd_staircase.json"), "--grid-resolution", "4"]).status.code(), Some(2));
}
