use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_linrate-bench"))
}

fn configs() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

#[test]
fn list_models_names_every_zoo_entry() {
    let out = bin().arg("list-models").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in linrate::generators::ZOO_NAMES {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn selftest_passes() {
    let out = bin().arg("selftest").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(!text.contains("FAIL"));
}

#[test]
fn run_writes_fig_data_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", configs().join("signed.json").to_str().unwrap(), "--reps", "1", "--quiet", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let r = linrate_bench::ResultRecord::read(&dir.path().join("fig_data_signed.json")).unwrap();
    assert_eq!(r.config.repetitions, 1);
    assert_eq!(r.points.len(), 10);
}

#[test]
fn recommend_prints_method_and_rationale() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.json");
    std::fs::write(&path, r#"{"linear_rate": false, "remainder": true}"#).unwrap();
    let out = bin().arg("recommend").arg(&path).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("standard_truncation: "));
}

#[test]
fn invalid_config_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(
        &path,
        r#"{"name": "x", "model": {"name": "bdi"}, "t": 1, "sweep": {"axis": "N", "values": [5, 3]},
        "solvers": [{"name": "closure"}], "reference": "self"}"#,
    )
    .unwrap();
    let out = bin().arg("run").arg(&path).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("strictly increasing"));
}
