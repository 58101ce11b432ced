use std::path::PathBuf;
use std::process::Command;

use qtwist_cli::{run, EXIT_FAILED, EXIT_OK, EXIT_REJECTED};

fn corpus(case: &str, file: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("corpus")
        .join(case)
        .join(file)
        .to_string_lossy()
        .into_owned()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qtwist"))
}

#[test]
fn binary_exit_codes() {
    let ok = bin().args(["classify", &corpus("identity2_classify", "input.json")]).output().unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    let out: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(out["rank"], 2);

    let bad = bin()
        .args(["equiv", &corpus("sl2_pair_equiv", "input_a.json"), &corpus("sl2_pair_equiv", "input_b.json")])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_REJECTED));
    let err: serde_json::Value = serde_json::from_slice(&bad.stderr).unwrap();
    assert_eq!(err["error"], "NotIntegralRepresentative");
    assert!(err["message"].as_str().unwrap().contains("entry ("));
}

#[test]
fn output_is_deterministic() {
    let args = ["qtwist", "classify", &corpus("triangular_classify", "input.json")];
    let a = run(args);
    let b = run(args);
    assert_eq!(a.code, EXIT_OK);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn tau_is_echoed_and_checked() {
    let input = corpus("identity2_classify", "input.json");
    let out = run(["qtwist", "classify", "--tau-re", "0.1", "--tau-im", "2.0", &input]);
    assert_eq!(out.code, EXIT_OK);
    assert!(out.stdout.contains("\"tau\":[1.0000000000000001e-1,2.0000000000000000e0]"));

    let dir = std::env::temp_dir().join(format!("qtwist-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let synth = dir.join("synth.json");
    let inv = corpus("synth_half_point", "input.json");
    let w = run(["qtwist", "synth", &inv, "--output", synth.to_str().unwrap()]);
    assert_eq!((w.code, w.stdout.as_str()), (EXIT_OK, ""));
    let other = run(["qtwist", "classify", "--tau-im", "2.0", synth.to_str().unwrap()]);
    assert_eq!(other.code, EXIT_REJECTED);
    assert!(other.stderr.contains("InvalidConfig"));
    let same = run(["qtwist", "classify", synth.to_str().unwrap()]);
    assert_eq!(same.code, EXIT_OK);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn bad_arguments_are_rejections() {
    assert_eq!(run(["qtwist", "frobnicate"]).code, EXIT_REJECTED);
    assert_eq!(run(["qtwist", "classify", "--tau-im", "-1", "x.json"]).code, EXIT_REJECTED);
    assert_eq!(run(["qtwist", "classify", "--eps-res", "0", "x.json"]).code, EXIT_REJECTED);
    assert_eq!(run(["qtwist", "classify", "does-not-exist.json"]).code, EXIT_REJECTED);
    let help = run(["qtwist", "--help"]);
    assert_eq!(help.code, EXIT_OK);
    assert!(help.stdout.contains("classify"));
}

#[test]
fn selftest_reports_one_line_per_trial() {
    let out = run(["qtwist", "selftest", "--seed", "9", "--trials", "6"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stdout);
    let lines: Vec<serde_json::Value> = out.stdout.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 6);
    for (i, l) in lines.iter().enumerate() {
        assert_eq!(l["seed"], 9 + i as u64);
        assert_eq!(l["pass"], true);
        assert!(l["case"].is_string() && l["detail"].is_string());
    }
}

#[test]
fn verification_failures_exit_three() {
    let out = run(["qtwist", "classify", "--eps-rank", "1e-30", &corpus("half_power_classify", "input.json")]);
    assert_eq!(out.code, EXIT_FAILED, "{}", out.stderr);
    assert!(out.stderr.contains("VerificationFailed"));
}

#[test]
fn short_windows_are_rejected() {
    let dir = std::env::temp_dir().join(format!("qtwist-short-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let text = std::fs::read_to_string(corpus("triangular_classify", "input.json")).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["window"] = serde_json::json!([0, 1]);
    let path = dir.join("short.json");
    std::fs::write(&path, doc.to_string()).unwrap();
    let out = run(["qtwist", "classify", path.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_REJECTED, "{}", out.stderr);
    assert!(out.stderr.contains("WindowTooShort"));
    std::fs::remove_dir_all(dir).unwrap();
}
