//! End-to-end checks of the command-line interface via the built binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qfst"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qfst-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn emit_zoo(name: &str, args: &[&str]) -> PathBuf {
    let path = tmp(name);
    let mut full = vec!["zoo"];
    full.extend_from_slice(args);
    full.push("--emit");
    let path_str = path.to_str().unwrap().to_owned();
    full.push(&path_str);
    let out = run(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn dist_prints_sorted_probabilities() {
    let r4 = emit_zoo("r4.json", &["--family", "R4", "--kind", "qfst", "--param", "cap=8"]);
    let out = run(&["dist", "--machine", r4.to_str().unwrap(), "--input", "00112"]);
    assert!(out.status.success());
    let lines: Vec<String> = stdout(&out).lines().map(String::from).collect();
    assert_eq!(lines, vec!["44 0.500000000000", "REJ 0.500000000000"]);
}

#[test]
fn validate_rejects_broken_machine() {
    let path = tmp("broken.json");
    std::fs::write(
        &path,
        r#"{
            "kind": "quantum",
            "states": ["a", "h"],
            "input_alphabet": ["0"],
            "output_alphabet": ["x"],
            "initial": "a",
            "accepting": ["h"],
            "rejecting": [],
            "transitions": {
                "INIT": [[1, 0], [0, 1]],
                "0": [[1, 1], [0, 1]],
                "END": [[0, 1], [1, 0]]
            },
            "outputs": {}
        }"#,
    )
    .unwrap();
    let out = run(&["validate", "--machine", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("unitary"));

    // unknown fields are rejected at parse time
    let bad = tmp("unknown-field.json");
    std::fs::write(&bad, r#"{"kind": "quantum", "surprise": 1}"#).unwrap();
    let out = run(&["validate", "--machine", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["dist", "--machine"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn relation_check_passes_for_r2() {
    let r2 = emit_zoo("r2.json", &["--family", "R2", "--kind", "qfst"]);
    let out = run(&[
        "check",
        "--machine",
        r2.to_str().unwrap(),
        "--relation",
        "R2",
        "--mode",
        "prob",
        "--alpha",
        "0.6666",
        "--max-len",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));

    // failing check exits 1
    let out = run(&[
        "check",
        "--machine",
        r2.to_str().unwrap(),
        "--relation",
        "R2",
        "--mode",
        "prob",
        "--alpha",
        "0.75",
        "--max-len",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn oracle_check_agrees() {
    let pcp = emit_zoo(
        "pcp.json",
        &["--family", "PCP", "--pcp-v", "a,ba", "--pcp-w", "ab,a", "--kind", "qfst"],
    );
    let out = run(&[
        "check",
        "--machine",
        pcp.to_str().unwrap(),
        "--oracle",
        "--max-len",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("oracle agreement"));
}

#[test]
fn range_exit_codes_distinguish_verdicts() {
    let r1 = emit_zoo(
        "r1.json",
        &["--family", "R1", "--kind", "qfst", "--param", "k=4", "--param", "cap=10"],
    );
    let out = run(&[
        "range", "--machine", r1.to_str().unwrap(), "--output", "22",
        "--alpha", "0.5", "--delta", "0.25",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("yes"));

    let thirteen = "2".repeat(13);
    let out = run(&[
        "range", "--machine", r1.to_str().unwrap(), "--output", &thirteen,
        "--alpha", "0.5", "--delta", "0.25",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stdout(&out).trim(), "no");
}

#[test]
fn run_prints_total_state() {
    let r5 = emit_zoo("r5.json", &["--family", "R5"]);
    let out = run(&["run", "--machine", r5.to_str().unwrap(), "--input", "0110"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("acc 0 1.00000000000"), "{text}");
    assert!(text.contains("rej 0.000000000000"), "{text}");
}

#[test]
fn zoo_emit_is_byte_stable() {
    let a = emit_zoo("stable-a.json", &["--family", "R4", "--kind", "qfst", "--param", "cap=4"]);
    let b = emit_zoo("stable-b.json", &["--family", "R4", "--kind", "qfst", "--param", "cap=4"]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    // emit -> validate -> dist round trip stays stable too
    let out1 = run(&["dist", "--machine", a.to_str().unwrap(), "--input", "012"]);
    let out2 = run(&["dist", "--machine", b.to_str().unwrap(), "--input", "012"]);
    assert_eq!(stdout(&out1), stdout(&out2));
}

#[test]
fn convert_pipeline_runs() {
    let parity = emit_zoo("parity.json", &["--family", "parity"]);
    let qfst_path = tmp("parity-qfst.json");
    let out = run(&[
        "convert", "--from", parity.to_str().unwrap(), "--to", "qfst",
        "--emit", qfst_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["validate", "--machine", qfst_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["dist", "--machine", qfst_path.to_str().unwrap(), "--input", "11"]);
    let text = stdout(&out);
    // twelve significant digits: one before the point, eleven after
    assert!(text.starts_with("0 1.00000000000\n"), "{text}");

    let back = tmp("parity-back.json");
    let out = run(&[
        "convert", "--from", qfst_path.to_str().unwrap(), "--to", "qfa",
        "--emit", back.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = run(&["validate", "--machine", back.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));

    let sq = tmp("pcp-sq.json");
    let pcp = emit_zoo(
        "pcp2.json",
        &["--family", "PCP", "--pcp-v", "a,ba", "--pcp-w", "ab,a", "--kind", "qfst"],
    );
    let out = run(&[
        "convert", "--from", pcp.to_str().unwrap(), "--squared-moduli",
        "--emit", sq.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = run(&["dist", "--machine", sq.to_str().unwrap(), "--input", "12"]);
    assert!(stdout(&out).contains("aba 0.666666666667"));
}

#[test]
fn classify_prints_chain_structure() {
    let parity = emit_zoo("parity2.json", &["--family", "parity"]);
    // classify needs a transducer; make one from the automaton first
    let qfst_path = tmp("parity-qfst2.json");
    run(&[
        "convert", "--from", parity.to_str().unwrap(), "--to", "qfst",
        "--emit", qfst_path.to_str().unwrap(),
    ]);
    // V_1 of the parity transducer is not stochastic past the hats, so
    // classify the squared-moduli machine instead.
    let sq = tmp("parity-sq.json");
    run(&[
        "convert", "--from", qfst_path.to_str().unwrap(), "--squared-moduli",
        "--emit", sq.to_str().unwrap(),
    ]);
    let out = run(&["classify", "--machine", sq.to_str().unwrap(), "--symbol", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("period"));
}

#[test]
fn tolerance_env_override_applies() {
    let r4 = emit_zoo("r4-tol.json", &["--family", "R4", "--kind", "qfst", "--param", "cap=4"]);
    // absurdly tight tolerance makes even exact machines fail validation
    let out = bin()
        .args(["validate", "--machine", r4.to_str().unwrap()])
        .env("QFST_TOL", "1e-18")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["validate", "--machine", r4.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
}

/// Every example machine shipped in docs/ passes validation.
#[test]
fn docs_machines_validate() {
    let docs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/machines");
    let mut found = 0;
    for entry in std::fs::read_dir(&docs).expect("docs/machines exists") {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let out = run(&["validate", "--machine", path.to_str().unwrap()]);
            assert_eq!(out.status.code(), Some(0), "{} fails validation", path.display());
            found += 1;
        }
    }
    assert!(found >= 4, "expected example machines in docs/machines");
}
