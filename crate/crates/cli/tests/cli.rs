use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn goi() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_goi"));
    c.env_remove("GOI_TOL");
    c
}

fn corpus(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus").join(rel)
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn report(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

#[test]
fn check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = goi().arg("check").arg(corpus("mll/axiom.proof")).output().unwrap();
    assert_eq!(code(&ok), 0);
    let r = report(&ok);
    assert_eq!(r["schema"], "goi-report/1");
    assert_eq!(r["status"], "pass");

    let bad = write(&dir, "bad.proof", "(tensor (ax X1)\n  (ax X2)");
    let o = goi().arg("check").arg(&bad).output().unwrap();
    assert_eq!(code(&o), 2);
    let r = report(&o);
    assert_eq!(r["error"]["kind"], "syntax");
    assert!(r["error"]["line"].as_u64().unwrap() >= 2);

    // the left context of a with rule has no partner on the right
    let rule = write(&dir, "rule.proof", "(with (ax A) (ax B))");
    let o = goi().arg("check").arg(&rule).output().unwrap();
    assert_eq!(code(&o), 3);
    assert_eq!(report(&o)["error"]["rule"], "with");

    let o = goi().arg("check").arg(dir.path().join("absent.proof")).output().unwrap();
    assert_eq!(code(&o), 4);
}

#[test]
fn interpret_goi1_lists_cut_support() {
    let o = goi()
        .args(["interpret", "--backend", "goi1"])
        .arg(corpus("mll/cut_chain_2.proof"))
        .arg(corpus("basis.sexp"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert_eq!(r["status"], "pass");
    assert!(!r["result"]["sigma_support"].as_array().unwrap().is_empty());
    assert!(r["result"]["nilpotency_degree"].as_u64().is_some());
}

#[test]
fn interpret_matricial_axiom_is_promising() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = goi()
        .arg("interpret")
        .arg(corpus("mall/axiom.proof"))
        .arg(corpus("basis.sexp"))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    let checks = r["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 6);
    assert!(checks.iter().all(|c| c["status"] == "pass"));
    let p = &r["result"]["promising"];
    for f in ["dialect", "pseudo_trace", "wager", "symmetry", "traces"] {
        assert_eq!(p[f], true, "{f}");
    }
}

#[test]
fn configuration_errors() {
    let dir = tempfile::tempdir().unwrap();
    let proof = write(&dir, "y.proof", "(ax Y9)");
    let o = goi().arg("interpret").arg(&proof).arg(corpus("basis.sexp")).output().unwrap();
    assert_eq!(code(&o), 4);
    assert_eq!(report(&o)["error"]["kind"], "missing_variable");

    // a positive witness that is too large to stay orthogonal to the negative one
    let basis = write(&dir, "b.sexp", "(X1 1 (pos (wit 1.0 1.0 1)) (neg (wit 1.0 1.0 2)))");
    let o = goi().arg("interpret").arg(corpus("mall/axiom.proof")).arg(&basis).output().unwrap();
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stdout));

    let o = goi().args(["interpret", "--backend", "goi1"]).arg(corpus("mall/with_axioms.proof")).arg(corpus("basis.sexp")).output().unwrap();
    assert_eq!(code(&o), 4);
}

#[test]
fn verify_is_deterministic_and_passes() {
    let run = || goi().args(["verify", "--suite", "identities", "--trials", "10", "--seed", "7"]).output().unwrap();
    let (a, b) = (run(), run());
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stdout));
    assert_eq!(a.stdout, b.stdout);
    let r = report(&a);
    assert_eq!(r["command"]["seed"], 7);
    assert!(r["checks"].as_array().unwrap().iter().all(|c| c["status"] == "pass"));
}

#[test]
fn mutation_fails_with_reproducer() {
    let o = goi().args(["verify", "--suite", "coherence", "--trials", "5", "--mutate"]).output().unwrap();
    assert_eq!(code(&o), 1);
    let r = report(&o);
    assert_eq!(r["status"], "fail");
    let failed: Vec<&Value> = r["checks"].as_array().unwrap().iter().filter(|c| c["status"] == "fail").collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().all(|c| c["reproducer"].is_string()));
}

#[test]
fn tolerance_override() {
    let o = goi().env("GOI_TOL", "1e-7").arg("check").arg(corpus("mll/axiom.proof")).output().unwrap();
    assert_eq!(report(&o)["tolerance"], 1e-7);
    let o = goi().arg("check").arg(corpus("mll/axiom.proof")).output().unwrap();
    assert_eq!(report(&o)["tolerance"], 1e-9);
}
