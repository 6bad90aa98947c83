//! The binary driven as a subprocess.

use std::process::{Command, Output};

fn capnodal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_capnodal")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn predict_prints_a_json_report() {
    let o = capnodal(&["predict", "--ell", "200", "--radius", "0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["ell"], 200);
    let mean = v["mean_local"].as_f64().unwrap();
    // length density sqrt(lambda / 2) / 2 times the cap area
    let want = 0.5 * (40200f64 / 2.0).sqrt() * 2.0 * std::f64::consts::PI * (1.0 - 0.5f64.cos());
    assert!((mean - want).abs() < 1e-9 * want, "{mean} vs {want}");
    assert!(v["second_moment"].is_null());
}

#[test]
fn out_of_range_radius_is_a_config_error() {
    let o = capnodal(&["predict", "--ell", "200", "--radius", "4.0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("radius must lie in (0, π)"), "{}", stderr(&o));
}

#[test]
fn unknown_flags_are_rejected() {
    let o = capnodal(&["mc", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--bogus"));
}

#[test]
fn help_lists_subcommands_and_flags() {
    let top = stdout(&capnodal(&["--help"]));
    for sub in ["predict", "sample", "mc", "sweep", "validate"] {
        assert!(top.contains(sub), "{sub} missing from help");
    }
    let mc = stdout(&capnodal(&["mc", "--help"]));
    for flag in ["--ell", "--radius", "--reps", "--seed", "--threads", "--with-global", "--out", "--config"] {
        assert!(mc.contains(flag), "{flag} missing from mc help");
    }
}

#[test]
fn mc_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("run.csv");
    let o = capnodal(&["mc", "--ell", "20", "--radius", "0.6", "--reps", "4", "--seed", "9", "--out", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("master_seed,replicate_index,ell,r,grid_n,z_local,m_local"));
    assert!(lines[1].starts_with("9,0,20,0.6,"));

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["seed"], 9);
    assert_eq!(manifest["n_records"], 4);
    assert!(manifest["rng_algorithm"].as_str().unwrap().contains("ChaCha8Rng"));

    let est: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(est["n"], 4);
}

#[test]
fn mc_is_reproducible_on_stdout() {
    let args = ["mc", "--ell", "20", "--radius", "0.6", "--reps", "3", "--seed", "4"];
    let strip = |o: Output| -> Vec<String> {
        stdout(&o).lines().map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_owned()).collect()
    };
    assert_eq!(strip(capnodal(&args)), strip(capnodal(&args)));
}

#[test]
fn config_file_with_a_typo_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"ell": 30, "raduis": 0.3}"#).unwrap();
    let o = capnodal(&["mc", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("raduis"));
}

#[test]
fn sample_reports_cap_statistics() {
    let o = capnodal(&["sample", "--ell", "30", "--radius", "0.6", "--seed", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["z_local"].as_f64().unwrap() > 0.0);
    assert!(v["z_global"].is_null());
}

#[test]
fn validate_runs_selected_criteria() {
    let o = capnodal(&["validate", "--only", "1,12"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("[PASS]")).count(), 2);
    assert_eq!(capnodal(&["validate", "--only", "99"]).status.code(), Some(2));
}
