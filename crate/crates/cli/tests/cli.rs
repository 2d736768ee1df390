use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use percgff::experiments::{numeric_digest, read_records_csv};

fn percgff(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_percgff")).args(args).current_dir(dir).output().unwrap()
}

#[test]
fn missing_config_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = percgff(&["experiment", "run", "absent.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.cfg"));
}

#[test]
fn unknown_key_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.cfg"), "experiment = gmc\nflux = 3\n").unwrap();
    let out = percgff(&["experiment", "run", "bad.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("flux"));
}

#[test]
fn green_solve_is_byte_identical_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    for name in ["a.bin", "b.bin"] {
        let out = percgff(&["green", "solve", "--d", "2", "--L", "8", "--p", "1", "--out", name], p);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (a, b) = (fs::read(p.join("a.bin")).unwrap(), fs::read(p.join("b.bin")).unwrap());
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn experiment_output_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(
        p.join("gmc.cfg"),
        "experiment = gmc\np = 0.7\nn = 16\ngamma = 0.5\nreplicas = 300\nseeds = 1..2\n",
    )
    .unwrap();
    let mut digests = Vec::new();
    for (threads, name) in [("1", "one.csv"), ("8", "eight.csv")] {
        let out = percgff(&["--threads", threads, "--out", name, "experiment", "run", "gmc.cfg"], p);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let records = read_records_csv(&fs::read_to_string(p.join(name)).unwrap()).unwrap();
        assert!(records.iter().any(|r| r.metric == "mean_mass"));
        digests.push(numeric_digest(&records));
    }
    assert_eq!(digests[0], digests[1]);
}

#[test]
fn seed_flag_overrides_config_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("lclt.cfg"), "experiment = lclt\np = 1\nn = 8, 16\neps = 0.2\ndelta = 0.3\nseeds = 1..3\n").unwrap();
    let out = percgff(&["--seed", "7", "--out", "r.csv", "experiment", "run", "lclt.cfg"], p);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let records = read_records_csv(&fs::read_to_string(p.join("r.csv")).unwrap()).unwrap();
    assert!(records.iter().all(|r| r.seed == 7));
}

#[test]
fn env_snapshot_round_trips_through_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let out = percgff(&["--seed", "3", "env", "sample", "--L", "6", "--p", "0.7"], p);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = percgff(&["env", "inspect", "env.txt"], p);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(summary.is_object());
}
