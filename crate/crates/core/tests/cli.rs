use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fraudbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fraudbench")).args(args).output().unwrap()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_writes_dataset() {
    let out = tempfile::tempdir().unwrap();
    let o = fraudbench(&["generate", "--config", path(&configs().join("amlsim2.json")), "--out", path(out.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let tx = std::fs::read_to_string(out.path().join("transactions.csv")).unwrap();
    assert_eq!(tx.lines().count(), 10001);
    let accounts = std::fs::read_to_string(out.path().join("accounts.csv")).unwrap();
    assert_eq!(accounts.lines().filter(|l| l.ends_with(",1")).count(), 50);
    assert!(out.path().join("features.csv").is_file());
}

#[test]
fn evaluate_then_report() {
    let data = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let o = fraudbench(&["generate", "--config", path(&configs().join("amlsim1.json")), "--out", path(data.path())]);
    assert!(o.status.success());
    let o = fraudbench(&[
        "evaluate", "--data", path(data.path()), "--model", "logistic", "--protocol", "stratified", "--seeds", "2", "--out",
        path(out.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("| logistic |"));
    let before = std::fs::read(out.path().join("metrics.csv")).unwrap();
    std::fs::remove_file(out.path().join("metrics.csv")).unwrap();
    let o = fraudbench(&["report", "--in", path(out.path()), "--format", "csv"]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(out.path().join("metrics.csv")).unwrap(), before);
    let o = fraudbench(&["report", "--in", path(out.path()), "--format", "md"]);
    assert!(o.status.success());
    assert!(out.path().join("report.md").is_file());
}

#[test]
fn exit_codes() {
    let out = tempfile::tempdir().unwrap();
    let o = fraudbench(&["evaluate", "--data", "/nonexistent", "--model", "xgboost", "--protocol", "stratified", "--out", path(out.path())]);
    assert_eq!(o.status.code(), Some(1), "unknown model kind");

    let bad = out.path().join("bad.json");
    std::fs::write(&bad, r#"{"legit_accounts": 2, "unexpected": true}"#).unwrap();
    let o = fraudbench(&["generate", "--config", path(&bad), "--out", path(out.path())]);
    assert_eq!(o.status.code(), Some(1), "schema error");

    let o = fraudbench(&["report", "--in", path(out.path()), "--format", "pdf"]);
    assert_eq!(o.status.code(), Some(1), "unknown format");

    let o = fraudbench(&["report", "--in", path(&out.path().join("missing")), "--format", "md"]);
    assert_eq!(o.status.code(), Some(2), "missing report is a runtime error");

    let o = fraudbench(&["evaluate", "--data", path(&out.path().join("missing")), "--model", "gcn", "--protocol", "stratified", "--out", path(out.path())]);
    assert_eq!(o.status.code(), Some(2), "missing dataset is a runtime error");
}
