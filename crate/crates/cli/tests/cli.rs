use std::fs;
use std::process::{Command, Output};

use ldsnoma::model::{Scenario, SpreadingMatrix, UserEquipment};

fn ldsnoma(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ldsnoma"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

const SMALL: [&str; 10] = ["--f", "6", "--k", "12", "--d", "1,2", "--drops", "2", "--trials", "30"];

#[test]
fn sweep_writes_stable_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rows.csv");
    let summary = dir.path().join("summary.csv");
    let mut args = vec!["sweep-d"];
    args.extend(SMALL);
    args.extend(["--out", out.to_str().unwrap(), "--summary", summary.to_str().unwrap()]);
    stdout(&ldsnoma(&args));
    let first = fs::read_to_string(&out).unwrap();
    assert!(first.starts_with("method,F,K,d,drop_seed,det_emi_bits,mc_emi_bits,mc_stderr_bits,"));
    assert_eq!(first.lines().count(), 1 + 2 * 2 * 4);
    assert!(fs::read_to_string(&summary).unwrap().contains("gain_over_random"));

    args.extend(["--threads", "1"]);
    stdout(&ldsnoma(&args));
    assert_eq!(fs::read_to_string(&out).unwrap(), first);
}

#[test]
fn nats_and_disabled_monte_carlo() {
    let mut args = vec!["sweep-k", "--nats", "--no-mc", "--methods", "greedy"];
    args.extend(SMALL);
    let text = stdout(&ldsnoma(&args));
    let mut lines = text.lines();
    assert!(lines.next().unwrap().contains("det_emi_nats"));
    assert!(lines.all(|l| l.starts_with("greedy,") && l.contains(",,,")));
}

#[test]
fn allocate_emits_conforming_triplets() {
    let text = stdout(&ldsnoma(&["allocate", "--f", "8", "--k", "20", "--d", "3"]));
    let v = SpreadingMatrix::from_triplets(&text).unwrap();
    assert_eq!((v.rows(), v.cols(), v.nnz()), (8, 20, 60));
}

#[test]
fn evaluate_reads_scenario_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scn.toml");
    let ues = (0..8).map(|k| UserEquipment::new(-100.0 - 5.0 * k as f64, 1.0, 2)).collect();
    Scenario::new(4, -120.0, ues).unwrap().save(&path).unwrap();
    let text = stdout(&ldsnoma(&["evaluate", "--scenario", path.to_str().unwrap(), "--trials", "20"]));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn bad_config_lists_every_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.toml");
    fs::write(&path, "F = 0\ncolour = \"blue\"\nunits = \"furlongs\"\n").unwrap();
    let out = ldsnoma(&["sweep-k", "--config", path.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    for key in ["colour", "units"] {
        assert!(err.contains(key), "{err}");
    }
}

#[test]
fn non_convergence_fails() {
    let out = ldsnoma(&["evaluate", "--f", "10", "--k", "30", "--d", "2", "--max-iter", "1", "--no-mc"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("converge"));
}
