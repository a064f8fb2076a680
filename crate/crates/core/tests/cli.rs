use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mom-tournament"))
}

fn write_config(dir: &std::path::Path, methods: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(
        &path,
        format!(
            r#"{{
                "problem": {{ "kind": "mean_estimation" }},
                "distribution": {{ "kind": "gaussian", "mean": [0, 0], "cov": [[1, 0], [0, 1]] }},
                "methods": {methods},
                "n_grid": [200],
                "r_grid": [0.5],
                "trials": 4,
                "seed": 1
            }}"#
        ),
    )
    .unwrap();
    path
}

#[test]
fn run_prints_csv_and_respects_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"["saa", "mom_tournament"]"#);
    let out = bin().arg("run").arg(&config).args(["--trials", "3", "--threads", "2"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("method,N,r,trials,"));
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(1).unwrap().starts_with("saa,200,0.5,3,"));

    let again = bin().arg("run").arg(&config).args(["--trials", "3", "--threads", "1"]).output().unwrap();
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}

#[test]
fn run_writes_json_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"["saa"]"#);
    let target = dir.path().join("out.json");
    let status = bin().arg("run").arg(&config).arg("--out").arg(&target).args(["--format", "json"]).status().unwrap();
    assert!(status.success());
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
}

#[test]
fn seed_env_var_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"["saa"]"#);
    let a = bin().arg("run").arg(&config).env("MOMT_SEED", "11").output().unwrap();
    let b = bin().arg("run").arg(&config).arg("--seed").arg("11").output().unwrap();
    let c = bin().arg("run").arg(&config).output().unwrap();
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), r#"["saa"]"#);
    assert_eq!(bin().arg("validate").arg(&good).status().unwrap().code(), Some(0));

    let empty = dir.path().join("empty.json");
    std::fs::copy(write_config(dir.path(), "[]"), &empty).unwrap();
    let out = bin().arg("validate").arg(&empty).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("method list"));

    let missing = bin().arg("run").arg(dir.path().join("absent.json")).status().unwrap();
    assert_eq!(missing.code(), Some(3));

    let good = write_config(dir.path(), r#"["saa"]"#);
    let unwritable = bin().arg("run").arg(&good).args(["--out", "/nonexistent-dir/x.csv"]).status().unwrap();
    assert_eq!(unwritable.code(), Some(3));
}

#[test]
fn list_problems_names_every_kind() {
    let out = bin().arg("list-problems").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for kind in ["mean_estimation", "linear_regression", "ridge_regression", "quadratic", "portfolio"] {
        assert!(text.contains(kind), "{kind}");
    }
}
