//! End-to-end checks of the `mscs` binary: exit codes, artifact layout, and
//! determinism of emitted files.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn mscs(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mscs"))
        .args(["--out", dir.to_str().unwrap()])
        .args(args)
        .output()
        .expect("binary runs")
}

/// First CSV field of a line, unquoting if the writer quoted it (model
/// encodings contain commas).
fn first_field(line: &str) -> String {
    if let Some(rest) = line.strip_prefix('"') {
        rest.split('"').next().unwrap().to_string()
    } else {
        line.split(',').next().unwrap().to_string()
    }
}

fn write_location_fixture(dir: &Path) -> std::path::PathBuf {
    // strong signal on y1, y2; noise-only y3, y4 (deterministic pseudo-noise)
    let mut csv = String::from("y1,y2,y3,y4\n");
    for i in 0..80 {
        let z = |k: u64| {
            let mut x = (i as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(k);
            x ^= x >> 29;
            x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
            (x >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        csv.push_str(&format!("{},{},{},{}\n", 3.0 + z(1), 3.0 + z(2), z(3), z(4)));
    }
    let path = dir.join("data.csv");
    std::fs::write(&path, csv).unwrap();
    path
}

#[test]
fn exhaustive_strong_signal_keeps_true_variables() {
    let dir = TempDir::new().unwrap();
    let data = write_location_fixture(dir.path());
    let out = mscs(
        &["exhaustive", "--family", "normal-location", "--alpha", "0.05", data.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let survivors = std::fs::read_to_string(dir.path().join("survivors.csv")).unwrap();
    let mut lines = survivors.lines();
    assert_eq!(lines.next().unwrap(), "model,lambda,df,pvalue");
    let models: Vec<String> = lines.map(first_field).collect();
    assert!(!models.is_empty());
    // every survivor contains the strong-signal variables 1 and 2
    for m in &models {
        let ids: Vec<&str> = m.split(',').collect();
        assert!(
            ids.contains(&"1") && ids.contains(&"2"),
            "survivor {m} drops a strong signal"
        );
    }
    assert!(dir.path().join("mscs.json").exists());
    assert!(dir.path().join("importance.csv").exists());

    // timings go to stderr; stdout stays deterministic
    let rerun = mscs(
        &["exhaustive", "--family", "normal-location", "--alpha", "0.05", data.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(out.stdout, rerun.stdout);
}

#[test]
fn usage_errors_exit_64() {
    let dir = TempDir::new().unwrap();
    let data = write_location_fixture(dir.path());
    let bad_alpha = mscs(
        &["exhaustive", "--family", "normal-location", "--alpha", "1.5", data.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(bad_alpha.status.code(), Some(64));

    let bad_zeta = mscs(
        &["sample", "--family", "normal-location", "--zeta", "0", data.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(bad_zeta.status.code(), Some(64));

    let bad_model = mscs(
        &["simulate", "--model", "5", "--n", "100", "--p", "4"],
        dir.path(),
    );
    assert_eq!(bad_model.status.code(), Some(64));

    let unknown_flag = mscs(&["exhaustive", "--nope"], dir.path());
    assert_eq!(unknown_flag.status.code(), Some(64));
}

#[test]
fn io_errors_exit_1() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "y1,y2\n").unwrap();
    let out = mscs(
        &["exhaustive", "--family", "normal-location", empty.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no observations"));

    let missing = mscs(
        &["exhaustive", "--family", "normal-location", "/nonexistent/file.csv"],
        dir.path(),
    );
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn sample_trajectory_is_bit_identical_across_runs() {
    let dir_a = TempDir::new().unwrap();
    let dir_b = TempDir::new().unwrap();
    let data = write_location_fixture(dir_a.path());
    let args = |d: &Path| {
        vec![
            "sample".to_string(),
            "--family".into(),
            "normal-location".into(),
            "--seed".into(),
            "42".into(),
            "--final-draw".into(),
            "5000".into(),
            data.to_str().unwrap().into(),
        ]
        .into_iter()
        .chain(["--out".to_string(), d.to_str().unwrap().to_string()])
        .collect::<Vec<_>>()
    };
    let run = |d: &Path| {
        Command::new(env!("CARGO_BIN_EXE_mscs"))
            .args(args(d))
            .output()
            .expect("binary runs")
    };
    let out_a = run(dir_a.path());
    let out_b = run(dir_b.path());
    assert_eq!(out_a.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out_a.stderr));
    assert_eq!(out_a.stdout, out_b.stdout);
    let traj_a = std::fs::read(dir_a.path().join("trajectory.csv")).unwrap();
    let traj_b = std::fs::read(dir_b.path().join("trajectory.csv")).unwrap();
    assert_eq!(traj_a, traj_b);
    assert!(String::from_utf8_lossy(&out_a.stdout).contains("hit_rate:"));
}

#[test]
fn sampled_members_reverify_under_exhaustive_screening() {
    let dir = TempDir::new().unwrap();
    let data = write_location_fixture(dir.path());
    let sample_dir = TempDir::new().unwrap();
    let out = mscs(
        &[
            "sample",
            "--family",
            "normal-location",
            "--seed",
            "1",
            "--final-draw",
            "20000",
            data.to_str().unwrap(),
        ],
        sample_dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let exhaustive_dir = TempDir::new().unwrap();
    let out = mscs(
        &["exhaustive", "--family", "normal-location", "--alpha", "0.05", data.to_str().unwrap()],
        exhaustive_dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));

    let survivors: std::collections::HashSet<String> =
        std::fs::read_to_string(exhaustive_dir.path().join("survivors.csv"))
            .unwrap()
            .lines()
            .skip(1)
            .map(first_field)
            .collect();
    let as_json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(sample_dir.path().join("as.json")).unwrap())
            .unwrap();
    let members = as_json["result"]["members"].as_array().unwrap();
    assert!(!members.is_empty());
    for m in members {
        let enc = encode_subset(&m["model"]);
        assert!(survivors.contains(&enc), "sampled member {enc} is not an exhaustive survivor");
    }
}

fn encode_subset(model: &serde_json::Value) -> String {
    let ids = model["Subset"].as_array().expect("subset model");
    if ids.is_empty() {
        "-".to_string()
    } else {
        ids.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
    }
}

#[test]
fn simulate_single_run_degenerate_summary() {
    let dir = TempDir::new().unwrap();
    let out = mscs(
        &[
            "simulate", "--model", "1", "--setting", "1", "--n", "100", "--p", "4", "--runs", "1",
            "--seed", "3",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    for line in summary.lines().skip(1) {
        let coverage: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(coverage == 0.0 || coverage == 1.0, "one-run coverage must be 0 or 1");
    }
    assert!(dir.path().join("summary.json").exists());
}
