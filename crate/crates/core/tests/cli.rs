use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qdlab::cli::RunManifest;
use qdlab::dynamics::{parse_csv, to_csv_string};
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_qdlab");

fn qdlab(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("QDLAB_SEED").output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn kink_lines(csv: &str) -> Vec<(String, f64, String)> {
    csv.lines()
        .filter_map(|l| l.strip_prefix("# kink,"))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].parse().unwrap(), f[2].to_string())
        })
        .collect()
}

fn sweep_csv(dir: &Path, name: &str, state: &str, channel: &str) -> String {
    let out = dir.join(name);
    let o = qdlab(&["sweep", "--state", state, "--channel", channel, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    fs::read_to_string(out).unwrap()
}

#[test]
fn compute_singlet_report() {
    let o = qdlab(&["compute", "--state", r#"{"type":"bell_diagonal","c":[-1,-1,-1]}"#]);
    assert!(o.status.success());
    let r = json(&o);
    assert!((r["gmqd"].as_f64().unwrap() - 0.5).abs() <= 1e-12);
    assert!((r["discord"].as_f64().unwrap() - 1.0).abs() <= 1e-6);
    assert!((r["concurrence"].as_f64().unwrap() - 1.0).abs() <= 1e-12);
}

#[test]
fn compute_reads_state_file_and_handles_mixed_state() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mixed.json");
    let mut re = [[0.0; 4]; 4];
    for (i, row) in re.iter_mut().enumerate() {
        row[i] = 0.25;
    }
    let im = [[0.0; 4]; 4];
    let spec = serde_json::json!({"type": "matrix", "re": re, "im": im});
    fs::write(&path, spec.to_string()).unwrap();
    let o = qdlab(&["compute", "--state", path.to_str().unwrap(), "--side", "B"]);
    assert!(o.status.success());
    let r = json(&o);
    for key in ["gmqd", "discord", "concurrence", "mutual_info"] {
        assert!(r[key].as_f64().unwrap().abs() <= 1e-10, "{key}");
    }
    assert_eq!(r["side"], "B");
}

#[test]
fn unphysical_state_exits_2() {
    let o = qdlab(&["compute", "--state", r#"{"type":"bell_diagonal","c":[1,1,1]}"#]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("NotPhysical"));
}

#[test]
fn missing_state_file_exits_1() {
    let o = qdlab(&["compute", "--state", "/nonexistent/state.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn invalid_sweep_range_exits_2() {
    let o = qdlab(&["sweep", "--state", r#"{"type":"bell_diagonal","c":[-1,-1,-1]}"#, "--p-start", "0.8", "--p-end", "0.2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn phase_damping_sweep_reports_crossing_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let csv = sweep_csv(dir.path(), "pdc.csv", r#"{"type":"bell_diagonal","c":[1,-0.6,0.6]}"#, "pdc");
    let (rows, _) = parse_csv(&csv).unwrap();
    assert_eq!(rows.len(), 201);
    for r in &rows {
        let s4 = (1.0 - r.p).powi(4);
        assert!((r.gmqd - (0.34 * s4).min(0.09 * (1.0 + s4))).abs() <= 1e-12);
    }
    let crossing = 1.0 - 0.6_f64.sqrt();
    assert!(kink_lines(&csv).iter().any(|k| k.0 == "gmqd" && (k.1 - crossing).abs() <= 0.005));

    let out = dir.path().join("pdc.csv");
    let manifest_path = RunManifest::path_for(&out);
    let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(&manifest_path).unwrap()).unwrap();
    assert_eq!(manifest.command, "sweep");
    assert_eq!(manifest.outputs, vec![out.clone()]);
    fs::remove_file(&out).unwrap();
    let o = qdlab(&["replay", manifest_path.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(&out).unwrap(), csv);
}

#[test]
fn emitted_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let csv = sweep_csv(dir.path(), "third.csv", r#"{"type":"bell_diagonal","c":[0.5,0,0.5],"d":-0.5}"#, "pdc");
    let (rows, kinks) = parse_csv(&csv).unwrap();
    let again = to_csv_string(&rows, &kinks);
    assert_eq!(parse_csv(&again).unwrap().0, rows);
    let strip = |s: &str| s.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&again), strip(&csv));
}

#[test]
fn singlet_amplitude_damping_kinks() {
    let dir = tempfile::tempdir().unwrap();
    let csv = sweep_csv(dir.path(), "adc.csv", r#"{"type":"bell_diagonal","c":[-1,-1,-1]}"#, "adc");
    let kinks = kink_lines(&csv);
    assert!(kinks.iter().any(|k| k.0 == "gmqd" && (k.1 - 0.5).abs() <= 0.005));
    assert!(kinks.iter().all(|k| k.0 != "discord"), "{kinks:?}");
}

#[test]
fn third_example_kinks() {
    let dir = tempfile::tempdir().unwrap();
    let csv = sweep_csv(dir.path(), "third.csv", r#"{"type":"bell_diagonal","c":[0.5,0,0.5],"d":-0.5}"#, "pdc");
    let kinks = kink_lines(&csv);
    assert!(kinks.iter().any(|k| k.0 == "discord" && (k.1 - 0.22).abs() <= 0.01));
    assert!(kinks.iter().all(|k| k.0 != "gmqd"), "{kinks:?}");
}

#[test]
fn sweep_to_stdout_matches_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let state = r#"{"type":"bell_diagonal","c":[0.3,-0.2,0.1]}"#;
    let out = dir.path().join("s.csv");
    let args = ["sweep", "--state", state, "--channel", "dpc", "--steps", "11"];
    let stdout = qdlab(&args);
    let mut with_out = args.to_vec();
    with_out.extend(["--out", out.to_str().unwrap()]);
    assert!(qdlab(&with_out).status.success());
    assert_eq!(String::from_utf8(stdout.stdout).unwrap(), fs::read_to_string(out).unwrap());
}

#[test]
fn oracle_passes_with_default_tolerances() {
    let o = qdlab(&["oracle", "--n-states", "100", "--seed", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    assert_eq!(r["pass"], true);
    assert!(r["max_route_gap"].as_f64().unwrap() <= 1e-12);
    assert!(r["max_picture_gap"].as_f64().unwrap() <= 1e-12);
    assert!(r["max_bruteforce_gap"].as_f64().unwrap() <= 1e-4);
}

#[test]
fn oracle_is_deterministic() {
    let a = qdlab(&["oracle", "--n-states", "1", "--seed", "17"]);
    let b = qdlab(&["oracle", "--n-states", "1", "--seed", "17"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn oracle_with_zero_tolerance_exits_4_naming_a_state() {
    let o = qdlab(&["oracle", "--n-states", "3", "--bf-states", "1", "--route-tol", "0", "--picture-tol", "0", "--bf-tol", "0"]);
    assert_eq!(o.status.code(), Some(4));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("\"state\"") && err.contains("\"matrix\""), "{err}");
}

#[test]
fn seed_flag_overrides_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let state = r#"{"type":"bell_diagonal","c":[-1,-1,-1]}"#;
    let run = |extra: &[&str]| {
        let mut args = vec!["compute", "--state", state, "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        let o = Command::new(BIN).args(&args).env("QDLAB_SEED", "7").output().unwrap();
        assert!(o.status.success());
        let m: RunManifest = serde_json::from_str(&fs::read_to_string(RunManifest::path_for(&out)).unwrap()).unwrap();
        m.seed
    };
    assert_eq!(run(&[]), 7);
    assert_eq!(run(&["--seed", "9"]), 9);
}
