use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cumsense::config::{ExperimentConfig, ExperimentKind};

fn cumsense(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cumsense"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn feasibility_reports_both_minimums() {
    let dir = tempfile::tempdir().unwrap();
    let o = cumsense(&["feasibility", "--n", "20", "--out", path(dir.path())]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("min M (principal region) = 10"), "{text}");
    assert!(text.contains("min M (hexagonal support) = 19"), "{text}");
    let csv = fs::read_to_string(dir.path().join("feasibility.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2 + 20);
}

#[test]
fn ruler_prints_marks() {
    let dir = tempfile::tempdir().unwrap();
    let o = cumsense(&["ruler", "--n", "16", "--out", path(dir.path())]);
    assert!(o.status.success());
    let marks: Vec<usize> = stdout(&o).trim().split(',').map(|m| m.parse().unwrap()).collect();
    assert_eq!(marks.len(), 7);
    assert_eq!((marks[0], marks[6]), (0, 15));
}

#[test]
fn identical_config_gives_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["ccss-nmse", "--trials", "4", "--k", "200,400", "--seed", "7", "--snr-db", "0"];
    for d in [&a, &b] {
        let mut full = args.to_vec();
        full.extend(["--out", path(d.path())]);
        assert!(cumsense(&full).status.success());
    }
    let read = |d: &tempfile::TempDir, f: &str| fs::read(d.path().join(f)).unwrap();
    assert_eq!(read(&a, "ccss_nmse.csv"), read(&b, "ccss_nmse.csv"));
    let text = String::from_utf8(read(&a, "ccss_nmse.csv")).unwrap();
    assert!(text.starts_with("# cumsense "));
    assert!(text.lines().nth(1).unwrap().starts_with("ratio,m,k,q,mean_nmse,stderr"));
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    fs::write(&cfg_path, r#"{"experiment": "c3cs-mse", "n": 8, "k": [300], "trials": 2}"#).unwrap();
    let out = dir.path().join("run");
    let o = cumsense(&[
        "c3cs-mse",
        "--config",
        path(&cfg_path),
        "--ratios",
        "0.5:1.0:0.5",
        "--out",
        path(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let cfg: ExperimentConfig = serde_json::from_value(manifest["config"].clone()).unwrap();
    assert_eq!(cfg.n, 8);
    assert_eq!(cfg.trials, 2);
    assert_eq!(cfg.branch_counts(), vec![4, 8]);
    let csv = fs::read_to_string(out.join("c3cs_mse.csv")).unwrap();
    assert!(csv.lines().next().unwrap().ends_with(&cfg.hash()));
    // M = 4 < 8 still runs and is flagged
    let rows: Vec<&str> = csv.lines().skip(2).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].ends_with(",0.0"));
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn bad_input_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("music.json");
    fs::write(&cfg_path, ExperimentConfig::defaults(ExperimentKind::Music).to_json()).unwrap();
    for args in [
        vec!["c3cs-mse", "--config", path(&cfg_path)],
        vec!["c3cs-recover", "--m", "30", "--out", path(dir.path())],
        vec!["music", "--q", "3", "--out", path(dir.path())],
        vec!["c3cs-mse", "--ratios", "0.5:1.0", "--out", path(dir.path())],
    ] {
        let o = cumsense(&args);
        assert!(!o.status.success(), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    }
    // output path below a regular file
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let o = cumsense(&["gen", "--k", "2", "--out", path(&blocker.join("sub"))]);
    assert!(!o.status.success());
}

#[test]
fn print_config_round_trips() {
    let o = cumsense(&["music", "--snr-db", "-5", "--print-config"]);
    assert!(o.status.success());
    let cfg = ExperimentConfig::from_json(&stdout(&o)).unwrap();
    assert_eq!(cfg.noise.unwrap().target_snr_db, -5.0);
    assert_eq!(cfg.experiment, ExperimentKind::Music);
}
