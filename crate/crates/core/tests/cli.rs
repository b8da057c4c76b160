use std::path::Path;
use std::process::{Command, Output};

use planted::output::parse_curve_csv;

fn planted(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_planted"))
        .args(args)
        .env("PLANTED_WORKERS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn threshold_table_has_one_row_per_regime() {
    let out = stdout(&planted(&["thresholds", "--N", "100", "--k", "5", "--format", "csv"]));
    let rows: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 4, "{out}");
}

#[test]
fn sweep_csv_parses_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "family = \"prem\"\nM = 200\nk = 1\n");
    let args = [
        "sweep", "--config", &config, "--seed", "7", "--gamma-min", "0.5", "--gamma-max", "2.5",
        "--steps", "5", "--trials", "40", "--format", "csv",
    ];
    let first = stdout(&planted(&args));
    let second = stdout(&planted(&args));
    assert_eq!(first, second);

    let curve = parse_curve_csv(&first).unwrap();
    assert_eq!(curve.rows.len(), 5);
    assert_eq!(curve.master_seed, 7);
    for row in &curve.rows {
        assert_eq!(row.trials, 40);
        assert!(row.lo <= row.phat && row.phat <= row.hi);
    }
    assert!(first.contains("# config: M = 200  # file"));
}

#[test]
fn missing_seed_is_a_config_error() {
    let out = planted(&["sample", "--set", "family=\"prem\"", "--set", "M=10", "--set", "k=1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_key_is_a_config_error() {
    let out = planted(&["sample", "--seed", "1", "--set", "family=prem", "--set", "M=10", "--set", "k=1",
        "--set", "temperature=3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("temperature"));
}

#[test]
fn h_above_k_is_a_config_error() {
    let out = planted(&["thresholds", "--N", "50", "--k", "3", "--h", "4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("missing").join("out.csv");
    let out = planted(&["thresholds", "--N", "100", "--k", "5", "--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn exhausted_budget_exits_with_three() {
    let out = planted(&["solve", "--seed", "1", "--set", "family=wsbm", "--set", "N=20", "--set", "k=5",
        "--set", "mu_hat=2", "--set", "budget=10"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn sampled_instance_replays_through_solve() {
    let dir = tempfile::tempdir().unwrap();
    for weights in [true, false] {
        let path = dir.path().join(format!("inst-{weights}.json"));
        let path = path.to_str().unwrap();
        let mut args = vec!["sample", "--seed", "11", "--set", "family=hwsbm", "--set", "N=10",
            "--set", "k=4", "--set", "h=3", "--set", "mu_hat=2.5", "--out", path];
        if !weights {
            args.push("--no-weights");
        }
        stdout(&planted(&args));

        let replay = stdout(&planted(&["solve", "--instance", path, "--format", "structured"]));
        let direct = stdout(&planted(&["solve", "--seed", "11", "--set", "family=hwsbm", "--set", "N=10",
            "--set", "k=4", "--set", "h=3", "--set", "mu_hat=2.5", "--format", "structured"]));
        let replay: serde_json::Value = serde_json::from_str(&replay).unwrap();
        let direct: serde_json::Value = serde_json::from_str(&direct).unwrap();
        assert_eq!(replay["result"], direct["result"]);
    }
}

#[test]
fn overrides_are_echoed_with_their_source() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "family = \"wsbm\"\nN = 12\nk = 3\nmu_hat = 1.0\n");
    let out = stdout(&planted(&["solve", "--config", &config, "--seed", "2", "--set", "mu_hat=4.5",
        "--format", "text"]));
    assert!(out.contains("# config: mu_hat = 4.5  # override"), "{out}");
    assert!(out.contains("# config: N = 12  # file"), "{out}");
    assert!(out.contains("# config: sigma_hat = 1.0  # default"), "{out}");
}
