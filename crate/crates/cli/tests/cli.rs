//! Binary-level harness tests: exit codes, file outputs, determinism.

use std::path::Path;
use std::process::Command;

fn starball() -> Command {
    Command::new(env!("CARGO_BIN_EXE_starball"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

const SHARP_LO: &str = r#"{"experiment":"sharp-lo","n":10,"R":0.5}"#;

#[test]
fn run_writes_record_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sharp.json");
    write(&cfg, SHARP_LO);
    let out = dir.path().join("results");
    let status = starball()
        .args(["run"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let record: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("sharp.json")).unwrap()).unwrap();
    assert_eq!(record["experiment"], "sharp-lo");
    assert_eq!(record["outputs"]["rho_canonical"], 0.24609375);
    let csv = std::fs::read_to_string(out.join("sharp.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "rho,bound,ratio");
    assert!(csv.lines().nth(1).unwrap().starts_with("0.24609375,"));
}

#[test]
fn identical_configs_reproduce_records() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("audit.json");
    write(
        &cfg,
        r#"{"experiment":"esseen-audit","samples":20000,"seed":5,
            "system":{"vectors":[[1.0],[1.0]],"R":0.5,
                      "body":{"kind":"box","half_widths":[1.0]},
                      "noise":{"kind":"bernoulli"}}}"#,
    );
    let mut records = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("out{run}"));
        let status = starball()
            .args(["run"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        let mut v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("audit.json")).unwrap())
                .unwrap();
        v["wall_time_ms"] = serde_json::json!(0);
        // the destination directory is run metadata, not an output
        v["config"]["out"] = serde_json::json!(null);
        records.push(v);
    }
    assert_eq!(records[0], records[1]);
}

#[test]
fn validation_failure_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    write(&cfg, r#"{"experiment":"sharp-lo"}"#);
    let status = starball().args(["run"]).arg(&cfg).status().unwrap();
    assert_eq!(status.code(), Some(1));

    // unreadable path
    let status = starball()
        .args(["run", "/nonexistent/config.json"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn budget_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("huge.json");
    write(
        &cfg,
        r#"{"experiment":"gap-pipeline","A":1.0,"epsilon":0.5,"n_prime":5,
            "generator":{"n":30,"d":1,"R":1.0,"seed":1,
               "body":{"kind":"lp","p":2.0,"d":1},"noise":{"kind":"bernoulli"}}}"#,
    );
    let status = starball().args(["run"]).arg(&cfg).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn batch_runs_everything_despite_failures() {
    let dir = tempfile::tempdir().unwrap();
    let configs = dir.path().join("configs");
    std::fs::create_dir(&configs).unwrap();
    write(&configs.join("a_good.json"), SHARP_LO);
    write(&configs.join("b_bad.json"), r#"{"experiment":"sharp-lo","n":0,"R":1.0}"#);
    write(&configs.join("c_good.json"), SHARP_LO);
    let out = dir.path().join("results");
    let output = starball()
        .args(["batch"])
        .arg(&configs)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    // one validation failure dominates the exit code
    assert_eq!(output.status.code(), Some(1));
    // but both good configs still produced records
    assert!(out.join("a_good.json").exists());
    assert!(out.join("a_good.csv").exists());
    assert!(out.join("c_good.json").exists());
    assert!(!out.join("b_bad.json").exists());
}

#[test]
fn repo_configs_parse() {
    // the checked-in configs stay loadable
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let text = std::fs::read_to_string(&path).unwrap();
            starball_cli::ExperimentConfig::from_json(&text)
                .unwrap_or_else(|e| panic!("{} failed to parse: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 6);
}
