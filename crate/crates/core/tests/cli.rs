use std::process::Command;

fn cbd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cbd"))
}

#[test]
fn validate_reports_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(
        &path,
        r#"
output_dir = "out"
k = 1
architectures = ["CNN", "GRU"]

[[datasets]]
name = "F"
path = "missing.csv"
classes = ["none", "bully"]
"#,
    )
    .unwrap();
    let out = cbd().arg("validate").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("GRU"), "{stderr}");
    assert!(stderr.contains("missing.csv"), "{stderr}");
    assert!(stderr.lines().count() >= 3, "{stderr}");
}

#[test]
fn validate_prints_normalized_config() {
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/planted.toml");
    let out = cbd().args(["validate", config, "--seed", "7"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("seed = 7"));
}

#[test]
fn render_rejects_unknown_layout() {
    let out = cbd().args(["render", "results.csv", "--layout", "table9"]).output().unwrap();
    assert_ne!(out.status.code(), Some(0));
}
