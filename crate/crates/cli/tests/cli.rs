use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// Exit code and parsed JSON report.
fn run(args: &[&str], file: &str) -> (i32, Option<Value>) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let status =
        Command::new(env!("CARGO_BIN_EXE_hho")).args(args).arg("--out").arg(&out).arg(fixture(file)).output().unwrap();
    let report = std::fs::read_to_string(&out).ok().map(|t| serde_json::from_str(&t).unwrap());
    (status.status.code().unwrap(), report)
}

fn raw_report(args: &[&str], file: &str) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_hho")).args(args).arg(fixture(file)).output().unwrap();
    out.stdout
}

#[test]
fn validate_accepts_fixtures() {
    for f in ["toda3.json", "toda4.json", "strict.json", "perturbed.json", "massey.json"] {
        let (code, report) = run(&["validate"], f);
        assert_eq!(code, 0, "{f}");
        assert_eq!(report.unwrap()["status"], "clean");
    }
}

#[test]
fn validate_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\n \"ring\": \"z\",\n \"category\": [\n}").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hho")).arg("validate").arg(&broken).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));

    let out = Command::new(env!("CARGO_BIN_EXE_hho")).arg("validate").arg(fixture("bad_d2.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("degree 2"));

    let out = Command::new(env!("CARGO_BIN_EXE_hho")).arg("validate").arg(fixture("bad_ideal.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not absorbing"));

    let (code, _) = run(&["validate", "--ring", "fp:2"], "missing.json");
    assert_eq!(code, 2);
}

#[test]
fn rectify_strict_and_perturbed() {
    for f in ["strict.json", "perturbed.json"] {
        let (code, report) = run(&["rectify"], f);
        let report = report.unwrap();
        assert_eq!(code, 0);
        assert_eq!(report["outcome"], "rectified");
        assert!(report["stages"].as_array().unwrap().iter().all(|s| s["verdict"] == "vanishes"));
    }
}

#[test]
fn rectify_massey_obstructs_at_top() {
    let (code, report) = run(&["rectify"], "massey.json");
    let report = report.unwrap();
    assert_eq!(code, 1);
    assert_eq!(report["report"]["stage"]["object"], "g");
    assert_eq!(report["report"]["oracle"], "obstructed");
}

#[test]
fn rectify_toda3_obstructs() {
    let (code, report) = run(&["rectify", "--separate"], "toda3.json");
    assert_eq!(code, 1);
    assert_eq!(report.unwrap()["report"]["stage"]["k"], 2);
}

#[test]
fn toda3_report() {
    let (code, report) = run(&["toda"], "toda3.json");
    let report = report.unwrap();
    assert_eq!(code, 1);
    assert_eq!(report["loop_target_homology"]["0"], "Z");
    let union = &report["bracket"]["union"];
    assert_eq!(union["ambient"], "Z");
    assert_eq!(union["quotient"], "Z/2");
    assert_eq!(union["verdict"], "obstructed");
}

#[test]
fn toda4_reports_two_separated_brackets() {
    let (code, report) = run(&["toda"], "toda4.json");
    let report = report.unwrap();
    assert_eq!(code, 0);
    assert_eq!(report["bracket"]["separated"].as_array().unwrap().len(), 2);
    assert!(report["bracket"]["loops"].as_array().unwrap().iter().all(|l| l["holds"] == true));
}

#[test]
fn massey_report() {
    let (code, report) = run(&["massey"], "massey.json");
    let p = &report.unwrap()["product"];
    assert_eq!(code, 1);
    assert_eq!(p["representative"], "bx");
    assert_eq!(p["value"]["indeterminacy"].as_array().unwrap().len(), 0);
    assert_eq!(p["pipeline"]["verdict"], "obstructed");
}

#[test]
fn reports_are_byte_identical() {
    for (cmd, f) in
        [("rectify", "perturbed.json"), ("toda", "toda4.json"), ("massey", "massey.json"), ("rectify", "toda3.json")]
    {
        let args = [cmd, "--seed", "17"];
        let a = raw_report(&args, f);
        assert!(!a.is_empty());
        assert_eq!(a, raw_report(&args, f), "{cmd} {f}");
    }
}
