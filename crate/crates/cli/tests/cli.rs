use std::fs;
use std::path::Path;
use std::process::Command;

use fraclab::{parse_config, run_experiment, Experiment, RunOptions};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fraclab"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn list_prints_every_experiment() {
    let out = bin().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for e in Experiment::ALL {
        assert!(text.lines().any(|l| l.starts_with(e.name()) && l.len() > e.name().len() + 10), "{text}");
    }
}

#[test]
fn bad_config_exits_with_the_valid_names() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"experiment":"heat-flow"}"#);
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("torsion-convergence") && err.contains("sign-truncation-minimizers"), "{err}");
}

#[test]
fn failing_check_gives_nonzero_exit() {
    // 3·torsion is no supersolution for a load of 10
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"experiment":"subsuper-demo","resolutions":[16],"nonlinearity":{"name":"constant","params":[10]}}"#,
    );
    let out = bin().arg("run").arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().contains("FAIL"));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("o/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["summary"]["pass"], false);
}

#[test]
fn fixed_point_ladder_csv_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"experiment":"moser-ladder","s":0.75,"params":{"ladder_dim":3,"ladder_q":3,"ladder_mu":1,"instances":10}}"#,
    );
    let out = bin().arg("run").arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let mut rdr = csv::Reader::from_path(dir.path().join("o/moser_ladder.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).filter(|r| &r[0] == "configured").collect();
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| &r[3] == "1" && &r[4] == "false"));
}

#[test]
fn manifest_has_schema_config_and_hashes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(r#"{"experiment":"torsion-convergence","resolutions":[8,16]}"#).unwrap();
    let opts = RunOptions {
        out: Some(dir.path().to_path_buf()),
        seed: Some(7),
        jobs: Some(2),
    };
    let m = run_experiment(&cfg, &opts).unwrap();
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["config"]["experiment"], "torsion-convergence");
    assert_eq!(v["config"]["seed"], 7);
    assert_eq!(v["artifacts"].as_array().unwrap().len(), m.artifacts.len());
    for a in &m.artifacts {
        assert_eq!(a.sha256.len(), 64);
        assert_eq!(fs::read(dir.path().join(&a.file)).unwrap().len(), a.bytes);
    }
    assert!(!m.stages.is_empty());
}

#[test]
fn artifacts_do_not_depend_on_the_worker_count() {
    let cfg = parse_config(r#"{"experiment":"wmp-sweep","resolutions":[16,32],"params":{"instances":20}}"#).unwrap();
    let run = |jobs| {
        let dir = tempfile::tempdir().unwrap();
        let m = run_experiment(
            &cfg,
            &RunOptions {
                out: Some(dir.path().to_path_buf()),
                seed: None,
                jobs: Some(jobs),
            },
        )
        .unwrap();
        m.artifacts.iter().map(|a| (a.file.clone(), a.sha256.clone())).collect::<Vec<_>>()
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn seed_override_changes_random_artifacts() {
    let cfg = parse_config(r#"{"experiment":"wmp-sweep","resolutions":[16],"params":{"instances":10}}"#).unwrap();
    let run = |seed| {
        let dir = tempfile::tempdir().unwrap();
        let opts = RunOptions {
            out: Some(dir.path().to_path_buf()),
            seed: Some(seed),
            jobs: None,
        };
        run_experiment(&cfg, &opts).unwrap().artifacts[0].sha256.clone()
    };
    assert_ne!(run(1), run(2));
}
