use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn crasp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crasp"))
        .args(args)
        .env("CRASP_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_prints_accept() {
    let o = crasp(&["run", data("majority.crasp").to_str().unwrap(), "110"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "accept\n");
    let o = crasp(&["run", data("majority.crasp").to_str().unwrap(), "100"]);
    assert_eq!(stdout(&o), "reject\n");
}

#[test]
fn check_reports_sort_error_location() {
    let ok = crasp(&["check", data("majority.crasp").to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));
    let o = crasp(&["check", data("broken.crasp").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("broken.crasp:4:"), "{err}");
    assert!(err.contains("sort error"), "{err}");
}

#[test]
fn verify_majority_is_clean_and_deterministic() {
    let args = ["verify", "MAJORITY", "--exhaustive", "10", "--seed", "7", "--samples", "25,50:20"];
    let a = crasp(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let report: serde_json::Value = serde_json::from_str(stdout(&a).trim()).unwrap();
    assert_eq!(report["mismatches"], 0);
    assert_eq!(report["exhaustive_strings"], 2047);
    let b = crasp(&args);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn compile_exec_and_reg() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("majority.json");
    let o = crasp(&["compile", data("majority.crasp").to_str().unwrap(), "-o", net.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("MAJORITY: "));
    let o = crasp(&["exec", net.to_str().unwrap(), "110"]);
    assert_eq!(stdout(&o), "accept\n");
    let o = crasp(&["exec", net.to_str().unwrap(), "0"]);
    assert_eq!(stdout(&o), "reject\n");
    let o = crasp(&["reg", net.to_str().unwrap()]);
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["phi_energy"], 0.0);
    assert_eq!(r["period"], 1.0);
}

#[test]
fn exit_codes() {
    assert_eq!(crasp(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(crasp(&["verify", "NOPE"]).status.code(), Some(2));
    assert_eq!(crasp(&["check", "/nonexistent/x.crasp"]).status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let o = crasp(&["compile", data("majority.crasp").to_str().unwrap(), "-o", dir.path().join("no/such/dir").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn corpus_commands() {
    let o = crasp(&["corpus", "audit"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.lines().all(|l| l.starts_with("PASS")));
    assert!(out.contains("PARITY"));
    let o = crasp(&["corpus", "list"]);
    assert!(stdout(&o).contains("Tomita 4"));
    let o = crasp(&["corpus", "task", "parity", "5", "--seed", "3"]);
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines.len(), 9);
    assert_eq!(lines[0], "SOS");
    assert_eq!(lines[6], "SEP");
    assert_eq!(lines[8], "EOS");
    let o = crasp(&["corpus", "show", "TOMITA4"]);
    assert!(stdout(&o).contains("program TOMITA4"));
}
