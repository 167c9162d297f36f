use std::process::{Command, Output};

const CONFIG: &str = r#"
system = "coldStandby"
seed = 3

[coldStandby]
failRate = 0.1
tf = 10.0

[[methods]]
method = "mc"
N = 10000
R = 5
"#;

fn rarepdmp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rarepdmp")).args(args).env_remove("RAREPDMP_WORKERS").output().unwrap()
}

#[test]
fn cold_standby_run_matches_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, CONFIG).unwrap();
    let out = dir.path().join("r.csv");
    let o = rarepdmp(&["run", cfg.to_str().unwrap(), "-q", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut reader = csv::Reader::from_path(&out).unwrap();
    let row = reader.records().next().unwrap().unwrap();
    let mean: f64 = row[6].parse().unwrap();
    // [DERIVED] 1 − e^{−1}(1 + 1); σ of the mean over 5·10⁴ runs.
    let exact = 0.2642411;
    let sigma = (exact * (1.0 - exact) / 5e4f64).sqrt();
    assert!((mean - exact).abs() < 3.0 * sigma, "{mean}");

    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("r.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["system"]["kind"], "coldStandby");
    assert_eq!(manifest["methods"][0]["replicationSeeds"].as_array().unwrap().len(), 5);
    assert!(manifest.get("workers").is_none());
}

#[test]
fn stdout_mode_prints_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, CONFIG).unwrap();
    let o = rarepdmp(&["run", cfg.to_str().unwrap(), "-q", "--stdout", "--format", "json", "--seed", "11"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v[0]["seed"], 11);
    assert_eq!(v[0]["pHat"].as_array().unwrap().len(), 5);
    assert!(v[0]["wallTimeSeconds"].is_null());
}

#[test]
fn invalid_configuration_fails_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, CONFIG.replace("tf = 10.0", "tf = -1.0")).unwrap();
    let o = rarepdmp(&["run", cfg.to_str().unwrap(), "-q", "--stdout"]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 5"), "{err}");
}

#[test]
fn unwritable_output_fails_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, CONFIG).unwrap();
    let bad = dir.path().join("missing/dir/out.csv");
    let o = rarepdmp(&["run", cfg.to_str().unwrap(), "-q", "--out", bad.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot write"));
}

#[test]
fn selfcheck_passes_and_catches_a_leaky_kernel() {
    let o = rarepdmp(&["selfcheck"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let o = rarepdmp(&["selfcheck", "--rejection-fallback"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let o = rarepdmp(&["selfcheck", "--inject-kernel-bug"]);
    assert!(!o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("FAIL kernel normalization") && text.contains("m=(On,Off)"), "{text}");
}

#[test]
fn worker_flag_beats_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, CONFIG).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_rarepdmp"))
        .args(["run", cfg.to_str().unwrap(), "--stdout", "--workers", "2"])
        .env("RAREPDMP_WORKERS", "3")
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&o.stderr).contains("on 2 worker(s)"));
    let o = Command::new(env!("CARGO_BIN_EXE_rarepdmp")).args(["run", cfg.to_str().unwrap(), "--stdout"]).env("RAREPDMP_WORKERS", "3").output().unwrap();
    assert!(String::from_utf8_lossy(&o.stderr).contains("on 3 worker(s)"));
}
