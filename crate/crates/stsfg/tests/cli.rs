//! Black-box tests of the command-line binary: exit codes, validation
//! behavior, seed override, and output hygiene.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stsfg"))
}

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

const MINI_SIMULATE: &str = r#"
kind = "simulate"
seed = 3

[grid]
nx = 32
ny = 32
nt = 8
lx = 600.0e-6
ly = 600.0e-6
lt = 4.0e-12

[crystal]
chi = 1.0e-7
poling_period_m = 19.36e-6
length_m = 10.0e-3
signal_wavelength_m = 1558.0e-9
pump_wavelength_m = 1545.0e-9
n_signal = 2.14
n_pump = 2.14
group_index_signal = 2.19
group_index_pump = 2.20
group_index_sf = 2.23

[solver]
h0 = 2.5e-3
tol = 1.0e-3
h_max = 2.5e-3

[[signal]]
label = "s"
[[signal.spatial]]
basis = "lg"
l = 0
p = 0
w = 45.0e-6
[[signal.temporal]]
tau0 = 0.3e-12
t0 = 0.0

[[pump]]
label = "p"
[[pump.spatial]]
basis = "lg"
l = 0
p = 0
w = 42.0e-6
[[pump.temporal]]
tau0 = 0.3e-12
t0 = 0.0
"#;

#[test]
fn validate_accepts_bundled_configs() {
    for name in [
        "fig1b.cfg",
        "fig1c.cfg",
        "fig2.cfg",
        "rotation.cfg",
        "oamgrid.cfg",
    ] {
        let out = bin()
            .args(["validate", "--config"])
            .arg(scenario_path(name))
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn missing_crystal_block_is_a_validation_error_with_no_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    // Drop the [crystal] table entirely.
    let head = MINI_SIMULATE.split("[crystal]").next().unwrap();
    let tail = MINI_SIMULATE.split("[solver]").nth(1).unwrap();
    std::fs::write(&cfg, format!("{head}[solver]{tail}")).unwrap();
    let out_dir = tmp.path().join("out");
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("crystal"), "stderr: {stderr}");
    assert!(!out_dir.exists(), "no outputs may be written on rejection");
}

#[test]
fn unknown_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("typo.cfg");
    std::fs::write(&cfg, format!("crystal_angle = 1.0\n{MINI_SIMULATE}")).unwrap();
    let out = bin()
        .args(["validate", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn subcommand_kind_mismatch_is_rejected() {
    let out = bin()
        .args(["optimize", "--config"])
        .arg(scenario_path("fig1b.cfg"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("does not match"), "stderr: {stderr}");
}

#[test]
fn validation_lists_every_failing_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(
        &cfg,
        MINI_SIMULATE
            .replace("w = 45.0e-6", "w = -1.0")
            .replace("tol = 1.0e-3", "tol = -1.0"),
    )
    .unwrap();
    let out = bin()
        .args(["validate", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("w must be positive"), "stderr: {stderr}");
    assert!(stderr.contains("tol"), "stderr: {stderr}");
}

#[test]
fn simulate_writes_declared_outputs_and_honors_seed_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("mini.cfg");
    std::fs::write(&cfg, MINI_SIMULATE).unwrap();
    let out_dir = tmp.path().join("out");
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .args(["--seed", "11", "--jobs", "1"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], serde_json::json!(11));

    // Every declared output exists and matches its digest; metadata.json is
    // deliberately not declared.
    use sha2::{Digest, Sha256};
    let outputs = report["outputs"].as_array().unwrap();
    assert!(!outputs.is_empty());
    for o in outputs {
        let name = o["name"].as_str().unwrap();
        assert_ne!(name, "metadata.json");
        let bytes = std::fs::read(out_dir.join(name)).unwrap();
        let digest = format!("{:x}", Sha256::digest(&bytes));
        assert_eq!(digest, o["sha256"].as_str().unwrap(), "digest of {name}");
    }
    assert!(out_dir.join("metadata.json").exists());
}

#[test]
fn simulate_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("mini.cfg");
    std::fs::write(&cfg, MINI_SIMULATE).unwrap();
    for dir in ["a", "b"] {
        let out = bin()
            .args(["simulate", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(tmp.path().join(dir))
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(tmp.path().join("a/report.json")).unwrap();
    let b = std::fs::read(tmp.path().join("b/report.json")).unwrap();
    assert_eq!(a, b);
}
