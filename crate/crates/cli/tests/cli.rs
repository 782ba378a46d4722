use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_expord"));
    cmd.env_remove("EXPORD_SEED");
    for a in args {
        if a.ends_with(".json") && !a.contains('/') {
            cmd.arg(fixture(a));
        } else {
            cmd.arg(a);
        }
    }
    cmd.output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn compare_zon_failure_has_witness() {
    let out = run(&["compare", "zon", "E2.json", "E3.json"]);
    assert_eq!(code(&out), 3);
    let v = json(&out);
    assert_eq!(v["dominates"], false);
    assert!(v["witness"]["point"].is_array());
    assert!(v["witness"]["beta"].is_array());
}

#[test]
fn compare_col_has_factor() {
    let out = run(&["compare", "col", "E1.json", "E2.json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["dominates"], true);
    assert_eq!(v["G"].as_array().unwrap().len(), 2);
}

#[test]
fn compare_self_zon() {
    let out = run(&["compare", "zon", "E2.json", "E2.json"]);
    assert_eq!(code(&out), 0);
    assert!(json(&out)["H"].is_array());
}

#[test]
fn compare_all_grid() {
    let out = run(&["compare", "all", "E1.json", "E2.json"]);
    assert_eq!(code(&out), 0);
    let rows = json(&out)["relations"].as_array().unwrap().clone();
    let got: Vec<(bool, bool)> = rows
        .iter()
        .map(|r| (r["forward"].as_bool().unwrap(), r["backward"].as_bool().unwrap()))
        .collect();
    assert_eq!(got, vec![(true, true), (false, true), (false, true), (false, true)]);
}

#[test]
fn usage_and_parse_errors_exit_1() {
    assert_eq!(code(&run(&["compare", "col", "bad_rows.json", "E1.json"])), 1);
    assert_eq!(code(&run(&["compare", "col", "missing.json", "E1.json"])), 1);
    assert_eq!(code(&run(&["compare", "sideways", "E1.json", "E2.json"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn mh_solve_examples() {
    let out = run(&["mh", "solve", "id2.json", "env_ll.json"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["cost"], "1");

    let out = run(&["mh", "solve", "id2.json", "env_llb.json"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["cost"], "inf");
}

#[test]
fn mh_implementable_flat() {
    let out = run(&["mh", "implementable", "flat.json", "env_ll.json"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["implementable"], false);
}

#[test]
fn mh_counterexample_cone() {
    let dir = tempfile::tempdir().unwrap();
    let env_path = dir.path().join("env.json");
    let out = run(&[
        "mh",
        "counterexample",
        "--order",
        "cone",
        "E1.json",
        "E2.json",
        "--out",
        env_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["environment"]["gradient"], serde_json::json!(["1/2", "1/10"]));
    assert_eq!(v["costs"]["E2"], "3/10");
    assert_eq!(v["costs"]["E1"], "1");

    // the written environment reproduces the guaranteed costs
    let env_arg = env_path.to_str().unwrap();
    let e1 = run(&["mh", "solve", "E1.json", env_arg]);
    let e2 = run(&["mh", "solve", "E2.json", env_arg]);
    assert_eq!(json(&e1)["cost"], "1");
    assert_eq!(json(&e2)["cost"], "3/10");
}

#[test]
fn counterexample_when_order_holds_is_usage_error() {
    let out = run(&["mh", "counterexample", "--order", "cone", "E2.json", "E1.json"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn sweep_examples() {
    let out = run(&["sweep", "2", "E2.json", "E1.json", "--trials", "30", "--seed", "1"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["violations"].as_array().unwrap().len(), 0);

    let out = run(&["sweep", "2", "E1.json", "E2.json", "--trials", "10", "--seed", "1"]);
    let v = json(&out);
    assert_eq!(v["dominates"], false);
    assert!(!v["counterexamples"].as_array().unwrap().is_empty());

    let out = run(&["sweep", "3", "E2.json", "E2.json", "--trials", "10", "--seed", "1"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["violations"].as_array().unwrap().len(), 0);
}

#[test]
fn seed_from_environment() {
    let with_flag = run(&["sweep", "1", "E1.json", "E2.json", "--trials", "5", "--seed", "9"]);
    let with_env = Command::new(env!("CARGO_BIN_EXE_expord"))
        .env("EXPORD_SEED", "9")
        .args(["sweep", "1"])
        .arg(fixture("E1.json"))
        .arg(fixture("E2.json"))
        .args(["--trials", "5"])
        .output()
        .unwrap();
    assert_eq!(with_flag.stdout, with_env.stdout);
    assert_eq!(json(&with_env)["seed"], 9);
}

#[test]
fn plot_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.svg");
    let b = dir.path().join("b.svg");
    for p in [&a, &b] {
        let out = run(&["plot", "zon", "E2.json", "E3.json", "--out", p.to_str().unwrap()]);
        assert_eq!(code(&out), 0);
    }
    let svg = std::fs::read(&a).unwrap();
    assert_eq!(svg, std::fs::read(&b).unwrap());
    assert!(String::from_utf8(svg).unwrap().starts_with("<svg"));
}

#[test]
fn plot_cone_rays() {
    let out = run(&["plot", "cone", "E1.json", "E2.json"]);
    assert_eq!(code(&out), 0);
    let svg = String::from_utf8(out.stdout).unwrap();
    // slope 2/3 ray ends at (1, 2/3), slope 5 ray at (1/5, 1)
    assert!(svg.contains(r#"x2="660.000000" y2="260.000000""#));
    assert!(svg.contains(r#"x2="180.000000" y2="60.000000""#));
}

#[test]
fn plot_rejects_three_states_for_zon() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("e.json");
    std::fs::write(
        &p,
        r#"{"states":3,"realizations":1,"rows":[["1"],["1"],["1"]]}"#,
    )
    .unwrap();
    assert_eq!(code(&run(&["plot", "zon", p.to_str().unwrap()])), 1);
}

#[test]
fn validate_detects_kinds() {
    let out = run(&["validate", "E2.json", "prior.json", "env_ll.json"]);
    assert_eq!(code(&out), 0);
    let kinds: Vec<String> = json(&out)["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["kind"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(kinds, ["experiment", "prior", "environment"]);
}

#[test]
fn report_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let r1 = dir.path().join("r1.json");
    let r2 = dir.path().join("r2.json");
    for r in [&r1, &r2] {
        run(&["--report", r.to_str().unwrap(), "compare", "cone", "E1.json", "E2.json"]);
    }
    let a = std::fs::read(&r1).unwrap();
    assert_eq!(a, std::fs::read(&r2).unwrap());
    let v: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["command"], "compare");
    assert_eq!(v["inputs"].as_array().unwrap().len(), 2);
    assert_eq!(v["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(v["result"]["dominates"], false);
    assert!(v.get("elapsed_ms").is_none());
}

#[test]
fn oracle_commands() {
    let out = run(&["oracle", "facets", "E2.json", "--point", "1/5,4/5"]);
    assert_eq!(json(&out)["member"], false);

    let out = run(&["oracle", "lcx", "E2.json", "E3.json", "--trials", "300", "--seed", "7"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["holds"], false);

    let out = run(&[
        "oracle",
        "bestresponse",
        "id2.json",
        "--t",
        "0,0",
        "--center",
        "1/2,1/2",
        "--scale",
        "1",
        "--resolution",
        "10",
    ]);
    assert_eq!(json(&out)["mu"], serde_json::json!(["1/2", "1/2"]));
}
