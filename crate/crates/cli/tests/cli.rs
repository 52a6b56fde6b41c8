use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_lieforge");

fn lieforge(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn generate_is_deterministic() {
    let a = lieforge(&["generate", "--dim", "3", "--seed", "7"]);
    let b = lieforge(&["generate", "--dim", "3", "--seed", "7"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert!(a.stdout.ends_with(b"\n"));
}

#[test]
fn missing_seed_is_echoed() {
    let out = lieforge(&["generate", "--dim", "2"]);
    assert_eq!(code(&out), 0);
    let stderr = String::from_utf8(out.stderr).unwrap();
    let seed: u64 = stderr
        .trim()
        .strip_prefix("seed: ")
        .unwrap()
        .parse()
        .unwrap();
    let again = lieforge(&["generate", "--dim", "2", "--seed", &seed.to_string()]);
    assert_eq!(again.stdout, out.stdout);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&lieforge(&["generate", "--dim", "1"])), 64);
    assert_eq!(code(&lieforge(&["generate"])), 64);
    assert_eq!(
        code(&lieforge(&[
            "generate",
            "--dim",
            "3",
            "--field",
            "quaternion"
        ])),
        64
    );
    assert_eq!(
        code(&lieforge(&["bench", "--dims", "2", "--repeat", "2"])),
        64
    );
    assert_eq!(code(&lieforge(&["frobnicate"])), 64);
    assert_eq!(code(&lieforge(&["--help"])), 0);
}

#[test]
fn emit_controls_optional_blocks() {
    let doc = |emit: &str| -> Value {
        let out = lieforge(&["generate", "--dim", "4", "--seed", "1", "--emit", emit]);
        serde_json::from_slice(&out.stdout).unwrap()
    };
    let none = doc("none");
    assert!(none.get("adjoint").is_none() && none.get("structure_constants").is_none());
    let both = doc("both");
    assert_eq!(both["adjoint"].as_array().unwrap().len(), 4);
    assert!(both["structure_constants"].is_array());
    assert!(doc("adjoint").get("structure_constants").is_none());
    let raw = String::from_utf8(
        lieforge(&["generate", "--dim", "4", "--seed", "1", "--emit", "both"]).stdout,
    )
    .unwrap();
    let order = [
        "format",
        "dim",
        "field",
        "mode",
        "seed",
        "rng_id",
        "attempts",
        "tolerances",
        "p_matrix",
        "null_vector",
        "c",
        "adjoint",
        "structure_constants",
    ];
    let positions: Vec<usize> = order
        .iter()
        .map(|k| raw.find(&format!("\"{k}\":")).unwrap())
        .collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]), "{positions:?}");
}

#[test]
fn nilpotent_three_dim_has_heisenberg_pattern() {
    let out = lieforge(&[
        "generate",
        "--dim",
        "3",
        "--mode",
        "nilpotent",
        "--seed",
        "3",
        "--emit",
        "structure",
    ]);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let list = doc["structure_constants"].as_array().unwrap();
    assert_eq!(list.len(), 1);
    assert_eq!(
        (&list[0][0], &list[0][1], &list[0][2]),
        (&Value::from(1), &Value::from(2), &Value::from(0))
    );
    assert!(doc["c"].is_null());
}

#[test]
fn verify_fresh_and_corrupted_documents() {
    let dir = tempfile::tempdir().unwrap();
    let out = lieforge(&["generate", "--dim", "10", "--seed", "11"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let path = write(dir.path(), "fresh.json", &text);
    let ok = lieforge(&["verify", &path]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stdout));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("result: PASS"));

    let mut doc: Value = serde_json::from_str(&text).unwrap();
    let entry = &mut doc["structure_constants"][0][3];
    *entry = Value::from(entry.as_f64().unwrap() + 1.0);
    let bad = write(dir.path(), "bad.json", &(doc.to_string() + "\n"));
    let out = lieforge(&["verify", &bad]);
    assert_eq!(code(&out), 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("jacobi") || stderr.contains("closure"),
        "{stderr}"
    );
}

#[test]
fn verify_selection_and_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = lieforge(&[
        "generate", "--dim", "5", "--seed", "2", "--field", "complex",
    ]);
    let path = write(
        dir.path(),
        "c.json",
        &String::from_utf8(out.stdout).unwrap(),
    );
    let out = lieforge(&["verify", &path, "--checks", "killing", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 1);
    assert_eq!(checks[0]["check"], "killing");
    assert!(
        checks[0]["residual"].is_number()
            && checks[0]["tolerance"].is_number()
            && checks[0]["seconds"].is_number()
    );

    let out = lieforge(&[
        "verify",
        &path,
        "--checks",
        "jacobi,closure",
        "--tol",
        "1e-6",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(code(&lieforge(&["verify", &path, "--checks", "bogus"])), 64);
}

#[test]
fn verify_reports_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = lieforge(&["generate", "--dim", "2", "--seed", "5", "--emit", "none"]);
    let text = String::from_utf8(out.stdout).unwrap();

    let v9 = write(
        dir.path(),
        "v9.json",
        &text.replace("lieforge/1", "lieforge/9"),
    );
    let out = lieforge(&["verify", &v9]);
    assert_eq!(code(&out), 65);
    assert!(String::from_utf8_lossy(&out.stderr).contains("version"));

    let mut doc: Value = serde_json::from_str(&text).unwrap();
    doc["p_matrix"][2] = Value::from(0.5);
    let col = write(dir.path(), "col.json", &(doc.to_string() + "\n"));
    let out = lieforge(&["verify", &col]);
    assert_eq!(code(&out), 65);
    assert!(String::from_utf8_lossy(&out.stderr).contains("integrity"));

    assert_eq!(code(&lieforge(&["verify", "/nonexistent/doc.json"])), 66);
}

#[test]
fn oracle_examples() {
    let out = lieforge(&["oracle", "--dim", "3", "--seed", "1"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("result: PASS"));

    let out = lieforge(&["oracle", "--dim", "2", "--seed", "1", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["dim_sys"], 0);
    assert_eq!(report["max_diff"], 0.0);

    let out = lieforge(&["oracle", "--dim", "40"]);
    assert_eq!(code(&out), 64);
    assert!(String::from_utf8_lossy(&out.stderr).contains("29640"));
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("b.csv");
    let out = lieforge(&[
        "bench",
        "--dims",
        "2,3",
        "--repeat",
        "3",
        "--seed",
        "1",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "n,mode,repeats,median_generate_s,median_verify_s,rng_id"
    );
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("2,generic,3,"));
    assert!(String::from_utf8_lossy(&out.stdout).contains("hardware:"));

    let out = lieforge(&["bench", "--dims", "2", "--seed", "1"]);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("n,mode,repeats,"));
}
