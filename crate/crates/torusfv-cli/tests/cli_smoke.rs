//! End-to-end exercises of the `torusfv` binary: exit codes, the
//! machine-readable error line, and the report files.

use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_torusfv"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("torusfv-cli-smoke").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

const RUN_CONFIG: &str = "[grid]\nd = 2\nn = 8\n\n[time]\ndt = 0.0625\nt_end = 0.625\n\n\
[physics]\ngamma = 1.4\nmu = 0.1\nlambda = 0.0\nkappa = 0.01\n\n\
[scheme]\neps = 0.0\n\n[ic]\npreset = constant\n";

#[test]
fn run_writes_timeseries_and_exits_zero() {
    let dir = scratch("run-ok");
    let config = dir.join("run.ini");
    fs::write(&config, RUN_CONFIG).unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.join("out/timeseries.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        torusfv_cli::csvio::TIMESERIES_HEADER
    );
    // 10 steps, record_every defaults to 1: 10 rows.
    assert_eq!(lines.count(), 10);
    // Constant preset: residual columns at round-off.
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let energy_residual: f64 = fields[10].parse().unwrap();
        let entropy_prod: f64 = fields[11].parse().unwrap();
        assert!(energy_residual <= 1e-12);
        assert!(entropy_prod.abs() <= 1e-12);
    }
}

#[test]
fn thermal_spot_runs_and_diffuses() {
    let dir = scratch("thermal-spot");
    let config = dir.join("run.ini");
    fs::write(
        &config,
        "[grid]\nd = 2\nn = 16\n\n[time]\ndt = 0.03125\nt_end = 0.25\n\n\
         [physics]\ngamma = 1.4\nmu = 0.1\nlambda = 0.0\nkappa = 0.1\n\n\
         [scheme]\neps = 0.0\n\n[ic]\npreset = thermal-spot\nc = 0.5\n",
    )
    .unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.join("out/timeseries.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    let theta_span = |row: &str| -> f64 {
        let f: Vec<&str> = row.split(',').collect();
        let min: f64 = f[14].parse().unwrap();
        let max: f64 = f[15].parse().unwrap();
        max - min
    };
    // Heat conduction narrows the temperature window monotonically-ish;
    // just require a clear overall contraction.
    let first = theta_span(rows.first().unwrap());
    let last = theta_span(rows.last().unwrap());
    assert!(last < 0.8 * first, "theta window {first} -> {last}");
}

#[test]
fn study_of_constant_preset_reports_nan_rates() {
    let dir = scratch("study-constant");
    let config = dir.join("study.ini");
    fs::write(
        &config,
        "[grid]\nd = 2\n\n[study]\nlevels = 2,4\nreference_n = 8\nrule = h\nct = 0.5\n\
         t_end = 0.5\n\n[physics]\ngamma = 1.4\nmu = 0.1\nlambda = 0.0\nkappa = 0.01\n\n\
         [scheme]\neps = 0.0\n\n[ic]\npreset = constant\n",
    )
    .unwrap();
    let out = bin()
        .args(["study", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.join("out"))
        .env("TORUSFV_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.join("out/eoc.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), torusfv_cli::csvio::EOC_HEADER);
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        // Error columns are zero, rate columns marked nan.
        for err_col in 3..=8 {
            let v: f64 = fields[err_col].parse().unwrap();
            assert!(v.abs() < 1e-12, "column {err_col}: {v}");
        }
        for rate_col in 9..=11 {
            assert_eq!(fields[rate_col], "nan");
        }
    }
}

#[test]
fn consistency_command_writes_per_level_defects() {
    let dir = scratch("consistency");
    let config = dir.join("consistency.ini");
    fs::write(
        &config,
        "[grid]\nd = 2\n\n[consistency]\nlevels = 4,8\nrule = h2\nct = 1.0\nt_end = 0.125\n\n\
         [physics]\ngamma = 1.4\nmu = 0.1\nlambda = 0.0\nkappa = 0.01\n\n\
         [scheme]\neps = 0.0\n\n[ic]\npreset = smooth-wave\n",
    )
    .unwrap();
    let out = bin()
        .args(["consistency", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.join("out/consistency.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), torusfv_cli::csvio::CONSISTENCY_HEADER);
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        let e_s: f64 = fields[6].parse().unwrap();
        assert!(e_s >= -1e-8, "entropy defect {e_s}");
    }
}

#[test]
fn invalid_gamma_names_the_field() {
    let dir = scratch("bad-gamma");
    let config = dir.join("run.ini");
    fs::write(&config, RUN_CONFIG.replace("gamma = 1.4", "gamma = 0.9")).unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    let first_line = stderr.lines().next().unwrap();
    assert!(
        first_line.starts_with("error: config:") && first_line.contains("gamma"),
        "stderr: {stderr}"
    );
}

#[test]
fn unknown_key_is_rejected() {
    let dir = scratch("unknown-key");
    let config = dir.join("run.ini");
    fs::write(&config, format!("{RUN_CONFIG}\n[output]\nrecordevery = 2\n")).unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("output.recordevery"), "stderr: {stderr}");
}

#[test]
fn check_passes_and_is_deterministic() {
    let run = || {
        let out = bin().args(["check"]).output().unwrap();
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    let a = run();
    let b = run();
    assert_eq!(a, b);
    assert!(a.lines().filter(|l| l.contains(": pass")).count() >= 8);
}

#[test]
fn usage_errors_exit_nonzero() {
    let out = bin().args(["transmogrify"]).output().unwrap();
    assert!(!out.status.success());
    let out = bin().args(["run"]).output().unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("error: usage:"));
}

#[test]
fn missing_config_file_is_io_error() {
    let out = bin()
        .args(["run", "--config", "/nonexistent/torusfv.ini"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error: io:"), "stderr: {stderr}");
}
