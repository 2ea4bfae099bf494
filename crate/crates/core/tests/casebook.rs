use std::process::Command;

use rqpd_core::casebook::{export_fixture, list_scenarios, run_scenario, Options};
use rqpd_core::judgment::Status;

fn rqpd(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_rqpd")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn catalog_has_every_case_study() {
    let ids: Vec<String> = list_scenarios().unwrap().into_iter().map(|e| e.id).collect();
    assert!(ids.len() >= 12);
    for id in ["working-example", "qbf-uniformity", "teleport-correct", "qotp-secure", "qwalk-equiv", "projective-separation"] {
        assert!(ids.iter().any(|x| x == id), "{id} missing");
    }
}

#[test]
fn reports_are_deterministic() {
    let opts = Options { seed: 9, ..Options::default() };
    let a = run_scenario("working-example", &opts).unwrap().to_json().unwrap();
    let b = run_scenario("working-example", &opts).unwrap().to_json().unwrap();
    assert_eq!(a, b);
}

#[test]
fn scenarios_pass_under_other_seeds() {
    for seed in [1, 2] {
        let opts = Options { seed, ..Options::default() };
        for id in ["teleport-correct", "qotp-correct", "comparability-demo"] {
            let rep = run_scenario(id, &opts).unwrap();
            assert_eq!(rep.status, Status::Passed, "{id} seed {seed}: {}", rep.summary());
        }
    }
}

#[test]
fn unknown_scenario_is_an_error() {
    assert!(run_scenario("no-such-case", &Options::default()).is_err());
}

#[test]
fn export_writes_programs_and_fixture() {
    let dir = std::env::temp_dir().join(format!("rqpd-export-{}", std::process::id()));
    let paths = export_fixture("teleport-correct", &dir, &Options::default()).unwrap();
    assert!(paths.iter().any(|p| p.file_name().unwrap() == "fixture.json"));
    let progs: Vec<_> = paths.iter().filter(|p| p.extension().is_some_and(|e| e == "qw")).collect();
    assert!(!progs.is_empty());
    for p in progs {
        rqpd_core::lang::parse(&std::fs::read_to_string(p).unwrap()).unwrap();
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn cli_exit_codes() {
    assert_eq!(rqpd(&["casebook", "run", "qotp-correct"]).0, 0);
    assert_eq!(rqpd(&["casebook", "run", "no-such-case"]).0, 64);
    assert_eq!(rqpd(&["frobnicate"]).0, 64);
    let (code, out) = rqpd(&["--json", "casebook", "list"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v.as_array().unwrap().len() >= 12);
}

#[test]
fn cli_runs_an_exported_program() {
    let dir = std::env::temp_dir().join(format!("rqpd-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let prog = dir.join("p.qw");
    let rho = dir.join("rho.json");
    std::fs::write(&prog, "var q : 2; q := H[q]").unwrap();
    std::fs::write(&rho, r#"{"dims":[2,2],"entries":[[1,0],[0,0],[0,0],[0,0]]}"#).unwrap();
    let (code, out) = rqpd(&["run", prog.to_str().unwrap(), "--input", rho.to_str().unwrap()]);
    assert_eq!(code, 0);
    let m: rqpd_core::linalg::Matrix = serde_json::from_str(&out).unwrap();
    assert!((m[(0, 1)].re - 0.5).abs() < 1e-12);
    std::fs::remove_dir_all(&dir).unwrap();
}
