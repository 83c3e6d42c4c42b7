use std::fs;
use std::path::Path;
use std::process::Command;

use psifno_cli::config::{
    DarcyConvergeParams, Experiment, ExperimentConfig, NsConvergeParams, Scheme, SpectralCheckParams,
};
use psifno_cli::run;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_psifno"))
}

fn write_config(dir: &Path, cfg: &ExperimentConfig) -> std::path::PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, cfg.to_json()).unwrap();
    p
}

fn small_spectral() -> ExperimentConfig {
    ExperimentConfig::new(
        Experiment::SpectralCheck(SpectralCheckParams {
            max_n: 3,
            probes: 1,
            ..Default::default()
        }),
        9,
    )
}

#[test]
fn passing_run_exits_zero_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small_spectral());
    let out = dir.path().join("out");
    let status = bin()
        .args(["spectral-check", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--jobs", "2"])
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let stdout = String::from_utf8_lossy(&status.stdout);
    assert!(stdout.contains("criterion 1 (spectral foundations): PASS"));
    let csv = fs::read_to_string(out.join("spectral_check.csv")).unwrap();
    assert!(csv.starts_with("d,N,probe,roundtrip,"));
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["pass"], true);
    assert_eq!(summary["seed"], 9);
    let echoed = ExperimentConfig::load(&out.join("config.json")).unwrap();
    assert_eq!(echoed.experiment, small_spectral().experiment);
}

#[test]
fn failed_criterion_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    // a rate window no first-order scheme can meet
    let cfg = ExperimentConfig::new(
        Experiment::NsConverge(NsConvergeParams {
            schemes: vec![Scheme::First],
            n: 4,
            first_range: [5.0, 6.0],
            ..Default::default()
        }),
        1,
    );
    let path = write_config(dir.path(), &cfg);
    let out = bin()
        .args(["ns-converge", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn invalid_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{"version": 1, "seed": 0, "experiment": {"kind": "ns-converge", "params": {"taus": [0.1]}}}"#)
        .unwrap();
    let out = bin().args(["ns-converge", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid config"));

    // config kind must match the subcommand
    let path = write_config(dir.path(), &small_spectral());
    let out = bin().args(["darcy-converge", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cfl_violation_is_reported_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::new(
        Experiment::NsConverge(NsConvergeParams {
            amplitude: 1.0,
            ..Default::default()
        }),
        0,
    );
    let err = run(&cfg, dir.path(), Some(1)).unwrap_err();
    assert!(matches!(err, psifno_cli::HarnessError::ConfigInvalid(_)));
    assert!(err.to_string().contains("CFL"), "{err}");
    assert!(!dir.path().join("summary.json").exists());
}

#[test]
fn darcy_second_order_sweep() {
    // λ = 1/2, k = 2, N ∈ {8, 16, 32, 64}: four rows, H¹ rate at least 1.7
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::new(
        Experiment::DarcyConverge(DarcyConvergeParams {
            k: vec![2],
            ..Default::default()
        }),
        0,
    );
    let out = run(&cfg, dir.path(), None).unwrap();
    assert!(out.report.slopes["h1.k2"] >= 1.7);
    let csv = fs::read_to_string(dir.path().join("darcy_converge.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn second_order_taylor_green_rate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::new(
        Experiment::NsConverge(NsConvergeParams {
            schemes: vec![Scheme::Second],
            t_final: 0.5,
            taus: vec![0.1, 0.05, 0.025],
            // τ = 0.1 needs a smaller velocity than the default to satisfy the CFL condition
            amplitude: 1.0 / 1024.0,
            ..Default::default()
        }),
        0,
    );
    let out = run(&cfg, dir.path(), None).unwrap();
    let rate = out.report.slopes["l2.second"];
    assert!((1.7..=2.3).contains(&rate), "{rate}");
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_spectral();
    run(&cfg, &dir.path().join("a"), Some(1)).unwrap();
    run(&cfg, &dir.path().join("b"), Some(3)).unwrap();
    for f in ["spectral_check.csv", "summary.json"] {
        assert_eq!(fs::read(dir.path().join("a").join(f)).unwrap(), fs::read(dir.path().join("b").join(f)).unwrap());
    }
    let mut other = cfg.clone();
    other.seed += 1;
    run(&other, &dir.path().join("c"), None).unwrap();
    assert_ne!(
        fs::read(dir.path().join("a/spectral_check.csv")).unwrap(),
        fs::read(dir.path().join("c/spectral_check.csv")).unwrap()
    );
}

#[test]
fn gnuplot_conversion() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    fs::write(&csv, "N,err,rate\n8,1e-2,\n16,2.5e-3,2e0\n").unwrap();
    let out = bin().arg("gnuplot").arg(&csv).output().unwrap();
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(dir.path().join("t.dat")).unwrap(), "# N err rate\n8 1e-2 NaN\n16 2.5e-3 2e0\n");
}

#[test]
fn default_config_prints_a_loadable_config() {
    let out = bin().args(["default-config", "ft-emulate"]).output().unwrap();
    assert!(out.status.success());
    let cfg = ExperimentConfig::from_json(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(cfg.experiment.kind(), "ft-emulate");
}
