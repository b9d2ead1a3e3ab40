//! End-to-end checks of the command-line interface.

use std::path::Path;
use std::process::Command;

fn ztqmc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ztqmc"))
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn gen_writes_a_loadable_instance() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inst.json");
    let out = ztqmc()
        .args(["gen", "--n", "12", "--seed", "77", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let inst = ztqmc::SpinGlassInstance::load(&path).unwrap();
    assert_eq!(inst.n_spins(), 12);
    assert_eq!(inst.seed(), 77);
    assert_eq!(inst.couplings().len(), 66);
}

#[test]
fn eigen_reports_the_two_spin_spectrum() {
    let out = ztqmc()
        .args(["eigen", "--n", "2", "--seed", "3", "--omega", "1.0"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let payload: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let theta1 = payload["theta1"].as_f64().unwrap();
    assert!((theta1 - (1.0 + 5.0f64.sqrt())).abs() < 1e-9);
    assert!(payload["iterations"].as_u64().unwrap() > 0);
    assert!(payload["classical_expectation"].as_f64().is_some());
}

#[test]
fn anneal_writes_report_and_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = ztqmc()
        .args([
            "anneal", "--n", "8", "--seed", "5", "--plackets", "40", "--omega-in", "2.0",
            "--steps", "4000", "--run-seed", "11", "--out",
        ])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&read(&out_dir.join("report.json"))).unwrap();
    assert_eq!(report["mode"], "anneal");
    assert_eq!(report["n_spins"], 8);
    // the final readout is consistent with its oracle when present
    let final_energy = report["final_raw_energy"].as_i64().unwrap();
    let oracle = report["oracle_energy"].as_i64().unwrap();
    assert!(final_energy >= oracle);
    let short = read(&out_dir.join("trajectory_short.csv"));
    assert!(short.starts_with("step,omega,energy_density,accept_rate\n"));
    assert!(short.lines().count() > 4);
    assert!(out_dir.join("trajectory_long.csv").exists());
}

#[test]
fn static_run_requires_positive_omega() {
    let out = ztqmc()
        .args([
            "static", "--n", "6", "--seed", "1", "--omega", "0", "--steps", "100",
            "--run-seed", "1",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("omega"));
}

#[test]
fn ensemble_is_reproducible_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    std::fs::write(
        &config_path,
        r#"{
            "mode": "anneal",
            "instance": {"generate": {"n": 6, "seed": 0}},
            "plackets": 12,
            "schedule": {"omega_in": 2.0, "total_steps": 1500},
            "ensemble": {"instances": 3, "seed_base": 17, "repetitions": 2}
        }"#,
    )
    .unwrap();
    let mut outputs = Vec::new();
    for (name, threads) in [("a", "4"), ("b", "1")] {
        let out_dir = dir.path().join(name);
        let out = ztqmc()
            .args(["ensemble", "--threads", threads, "--config"])
            .arg(&config_path)
            .arg("--out")
            .arg(&out_dir)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(read(&out_dir.join("summary.csv")));
    }
    assert_eq!(outputs[0], outputs[1], "parallel and serial summaries differ");
    assert!(outputs[0]
        .starts_with("instance_seed,rep,final_energy,oracle_energy,success,mean_density,stderr\n"));
    assert_eq!(outputs[0].lines().count(), 1 + 6);
}

#[test]
fn landscape_emits_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("land");
    let out = ztqmc()
        .args([
            "landscape", "--n", "10", "--seed", "9", "--starts", "5", "--moves", "20000",
            "--out",
        ])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(read(&out_dir.join("dos.csv")).starts_with("energy,count\n"));
    let profile = read(&out_dir.join("flip_path.csv"));
    assert!(profile.starts_with("flip_index,energy\n"));
    assert_eq!(profile.lines().count(), 1 + 11);
    assert!(read(&out_dir.join("greedy.csv")).starts_with("start,accepted_move,energy\n"));
    let summary: serde_json::Value =
        serde_json::from_str(&read(&out_dir.join("landscape.json"))).unwrap();
    assert_eq!(summary["n"], 10);
    assert!(summary["ground_energy"].as_i64().is_some());
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("static.json");
    std::fs::write(
        &config_path,
        r#"{
            "mode": "static",
            "instance": {"generate": {"n": 5, "seed": 2}},
            "static": {"omega": 1.0, "steps": 500, "burn_in": 100},
            "run_seed": 9
        }"#,
    )
    .unwrap();
    let out_dir = dir.path().join("run");
    let out = ztqmc()
        .args(["static", "--config"])
        .arg(&config_path)
        .args(["--omega", "2.5", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let short = read(&out_dir.join("trajectory_short.csv"));
    let first_row = short.lines().nth(1).unwrap();
    let omega: f64 = first_row.split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(omega, 2.5);
}

#[test]
fn mode_mismatch_between_config_and_subcommand_fails() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("anneal.json");
    std::fs::write(
        &config_path,
        r#"{"mode": "anneal", "instance": {"generate": {"n": 5, "seed": 2}},
            "schedule": {"omega_in": 2.0, "total_steps": 100}, "run_seed": 1}"#,
    )
    .unwrap();
    let out = ztqmc()
        .args(["static", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert!(!out.status.success());
}
