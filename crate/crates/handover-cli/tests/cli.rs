use std::path::Path;
use std::process::{Command, Output};

fn handover(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_handover"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .env("HANDOVER_WORKERS", "1")
        .output()
        .unwrap()
}

fn error_json(o: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().expect("an error line");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"))
}

#[test]
fn simulate_writes_samples_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = handover(dir.path(), &["simulate", "--policy", "2", "--trials", "30", "--seed", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "n,switches,outages,switch_rate,outage_rate,h_mean");
    assert_eq!(csv.lines().count(), 82);
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["command"], "simulate");
    assert_eq!(json["seed"], 4);
    assert_eq!(json["result"]["trials"], 30);
    assert_eq!(json["config_hash"].as_str().unwrap().len(), 64);
    // Nothing but the outputs is left behind.
    let mut names: Vec<String> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["run.json", "samples.csv"]);
}

#[test]
fn config_file_wins_over_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "seed = 7\n[estimator]\nkind = \"ls\"\n").unwrap();
    let o = handover(dir.path(), &["simulate", "--trials", "5", "--seed", "3", "--n-w", "6", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(json["seed"], 7);
    assert_eq!(json["config"]["estimator"]["kind"], "ls");
    assert_eq!(json["config"]["estimator"]["n_w"], 6);
}

#[test]
fn table_writes_twelve_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = handover(dir.path(), &["table", "--trials", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("table.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "row,v=5,v=20,v=40");
    assert_eq!(csv.lines().count(), 13);
    assert!(dir.path().join("table_long.csv").exists() && dir.path().join("table.json").exists());
}

#[test]
fn optimize_dumps_the_trellis() {
    let dir = tempfile::tempdir().unwrap();
    let o = handover(dir.path(), &["optimize", "--objective", "opt3", "--n", "40", "--horizon", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("trellis.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 8);
    assert_eq!(csv.lines().filter(|l| l.ends_with(",true")).count(), 1);
}

#[test]
fn bad_input_exits_nonzero_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = handover(dir.path(), &["simulate", "--preset", "nowhere"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"], "config");

    let o = handover(dir.path(), &["simulate", "--set", "channel.sigma_u=-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"], "config");

    let o = handover(dir.path(), &["simulate", "--set", "channel.sigma=4"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"], "config");

    let o = handover(dir.path(), &["simulate", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"], "usage");

    let o = handover(dir.path(), &["optimize", "--horizon", "13", "--depth", "15"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_json(&o)["error"], "horizon_too_long");

    let missing = dir.path().join("absent");
    let o = handover(&missing, &["simulate", "--trials", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_json(&o)["error"], "io");
    assert!(!missing.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}
