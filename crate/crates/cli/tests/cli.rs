use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use wlan_energy_cli::{OUTPUT_FILES, RECONCILIATION_HEADER};

const QUICK_SIM: &str = "
n_range = \"1-2\"
rates = [11.0]
long_duration = 2.0
long_warmup = 0.5
short_duration = 60.0
short_warmup = 5.0
";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wlan-energy"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) {
    let out = run(args);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

fn rows(dir: &Path, name: &str) -> Vec<Vec<String>> {
    read(dir, name)
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn default_analytic_sweep_writes_every_family() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("out");
    run_ok(&["--analytic-only", "--out-dir", dir.to_str().unwrap()]);
    for name in OUTPUT_FILES {
        assert!(dir.join(name).is_file(), "{name} missing");
    }
    let headers = [
        ("fractions_vs_n.csv", "mode,rate_mbps,stations,source,tx,rxd,rxls,idle,sleep"),
        ("current_vs_n.csv", "mode,rate_mbps,stations,source,current_ma,current_se"),
        ("efficiency_vs_n.csv", "mode,rate_mbps,stations,source,efficiency_mb_per_c"),
        ("throughput_vs_n.csv", "mode,rate_mbps,stations,source,throughput_mbps,throughput_se"),
        ("sojourn_vs_n.csv", "mode,rate_mbps,stations,source,sojourn_s,sojourn_se"),
        (
            "files_per_budget_vs_n.csv",
            "mode,rate_mbps,stations,source,charge_per_file_c,budget_c,files_per_budget",
        ),
    ];
    for (name, header) in headers {
        let text = read(&dir, name);
        assert_eq!(text.lines().next().unwrap(), header);
        // 2 modes x 3 rates x 8 station counts, analytic only
        assert_eq!(text.lines().count(), 1 + 48, "{name}");
        assert!(!text.contains(",sim,"));
    }
    assert_eq!(read(&dir, "reconciliation.csv"), RECONCILIATION_HEADER.join(",") + "\n");
}

#[test]
fn analytic_columns_do_not_depend_on_simulation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("quick.toml");
    fs::write(&cfg, QUICK_SIM).unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_ok(&["--config", cfg.to_str().unwrap(), "--analytic-only", "--out-dir", a.to_str().unwrap()]);
    run_ok(&["--config", cfg.to_str().unwrap(), "--out-dir", b.to_str().unwrap()]);
    for name in &OUTPUT_FILES[..6] {
        let with_sim: Vec<_> = rows(&b, name).into_iter().filter(|r| r[3] == "analytic").collect();
        assert_eq!(rows(&a, name), with_sim, "{name}");
        assert!(rows(&b, name).iter().any(|r| r[3] == "sim"));
    }
    let rec = read(&b, "reconciliation.csv");
    assert_eq!(rec.lines().next().unwrap(), RECONCILIATION_HEADER.join(","));
    // per point: 7 long metrics and 2 short ones
    assert_eq!(rows(&b, "reconciliation.csv").len(), 2 * 2 * 9);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("quick.toml");
    fs::write(&cfg, QUICK_SIM).unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        run_ok(&["--config", cfg.to_str().unwrap(), "--seed", "9", "--out-dir", d.to_str().unwrap()]);
    }
    for name in OUTPUT_FILES {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn budget_flag_scales_files_per_budget() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    run_ok(&["--analytic-only", "--mode", "psm", "--n-range", "2,4", "--rates", "11", "--budget", "100", "--out-dir", dir.to_str().unwrap()]);
    let table = rows(dir, "files_per_budget_vs_n.csv");
    assert_eq!(table.len(), 2);
    for r in table {
        assert_eq!(r[0], "psm");
        let charge: f64 = r[4].parse().unwrap();
        assert_eq!(r[5], "100.0");
        let files: f64 = r[6].parse().unwrap();
        assert!((files - 100.0 / charge).abs() <= 1e-12 * files);
    }
}

#[test]
fn invalid_config_exits_nonzero_with_message() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "rates = [11.0]\nbogus_key = 3\n").unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "--out-dir", tmp.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus_key"));

    let out = run(&["--analytic-only", "--n-range", "0-3", "--out-dir", tmp.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least 1"));

    let out = run(&["--config", tmp.path().join("missing.toml").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.toml"));
}
