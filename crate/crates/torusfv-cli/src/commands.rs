//! The four batch commands: `run`, `study`, `check`, `consistency`.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use torusfv_core::checks::{run_invariant_suite, PropertyResult};
use torusfv_core::consistency::{
    canonical_scalar, canonical_vector, consistency_report, ConsistencyReport, TestFunction,
};
use torusfv_core::convergence::{
    execute_level, assemble_study, DtRule, InitialData, PhysicsConfig, StudyConfig, StudyTable,
};
use torusfv_core::mesh::Grid;
use torusfv_core::scheme::{self, RunHistory};
use torusfv_core::thermo::GasParams;
use torusfv_core::Error as CoreError;

use crate::config::{Config, ConfigError};
use crate::csvio;
use crate::presets::IcPreset;

/// One-line machine-readable failure: `error: <stage>: <message>`.
#[derive(Debug)]
pub struct CliError {
    pub stage: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(stage: &'static str, message: impl Into<String>) -> Self {
        Self {
            stage,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "error: {}: {}", self.stage, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::new("config", e.0)
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::new("solver", e.to_string())
    }
}

fn load_config(path: &Path) -> Result<Config, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))?;
    Ok(Config::parse(&text)?)
}

fn parse_gas(cfg: &mut Config) -> Result<GasParams, CliError> {
    let gamma = cfg.require_f64("physics", "gamma")?;
    GasParams::new(gamma)
        .map_err(|_| CliError::new("config", format!("physics.gamma: must be > 1, got {gamma}")))
}

fn parse_physics(cfg: &mut Config) -> Result<PhysicsConfig, CliError> {
    let gas = parse_gas(cfg)?;
    let mu = cfg.require_f64("physics", "mu")?;
    let lambda = cfg.require_f64("physics", "lambda")?;
    let kappa = cfg.require_f64("physics", "kappa")?;
    let eps = cfg.require_f64("scheme", "eps")?;
    let alpha = cfg.get_f64("scheme", "alpha")?;
    let picard_tol = cfg.get_f64("scheme", "picard_tol")?.unwrap_or(1e-10);
    let picard_max = cfg.get_usize("scheme", "picard_max")?.unwrap_or(200);
    let phys = PhysicsConfig {
        gas,
        mu,
        lambda,
        kappa,
        eps,
        alpha,
        picard_tol,
        picard_max,
    };
    // Fail configuration errors here, with field names, rather than at the
    // first step.
    phys.scheme_params(1.0, 0.5)
        .map_err(|e| CliError::new("config", describe_param_error(&e)))?;
    Ok(phys)
}

fn describe_param_error(e: &CoreError) -> String {
    match e {
        CoreError::InvalidParameter { name, value } => match *name {
            "eps" => format!("scheme.eps: must lie in (-1, 1), got {value}"),
            "alpha" => format!("scheme.alpha: must be > 0, got {value}"),
            "mu" => format!("physics.mu: must be > 0, got {value}"),
            "lambda" => format!("physics.lambda: must be >= 0, got {value}"),
            "kappa" => format!("physics.kappa: must be > 0, got {value}"),
            "picard_tol" => format!("scheme.picard_tol: must be > 0, got {value}"),
            other => format!("{other}: out of range ({value})"),
        },
        other => other.to_string(),
    }
}

fn parse_ic(cfg: &mut Config) -> Result<IcPreset, CliError> {
    let name = cfg.require_str("ic", "preset")?;
    let a = cfg.get_f64("ic", "a")?;
    let b = cfg.get_f64("ic", "b")?;
    let c = cfg.get_f64("ic", "c")?;
    Ok(IcPreset::from_config(&name, a, b, c)?)
}

fn parse_output(
    cfg: &mut Config,
    out_override: Option<&Path>,
) -> Result<(PathBuf, usize), CliError> {
    let dir = out_override
        .map(Path::to_path_buf)
        .or_else(|| cfg.get_str("output", "dir").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let every = cfg.get_usize("output", "record_every")?.unwrap_or(1).max(1);
    Ok((dir, every))
}

fn write_report(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::new("io", format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents)
        .map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))?;
    Ok(path)
}

/// Outcome of `run`: the written report plus the full history for callers
/// that inspect it programmatically.
pub struct RunOutcome {
    pub csv_path: PathBuf,
    pub history: RunHistory,
}

pub fn run_command(config_path: &Path, out_override: Option<&Path>) -> Result<RunOutcome, CliError> {
    let mut cfg = load_config(config_path)?;
    let d = cfg.require_usize("grid", "d")?;
    let n = cfg.require_usize("grid", "n")?;
    let dt = cfg.require_f64("time", "dt")?;
    let t_end = cfg.require_f64("time", "t_end")?;
    let phys = parse_physics(&mut cfg)?;
    let preset = parse_ic(&mut cfg)?;
    let (out_dir, record_every) = parse_output(&mut cfg, out_override)?;
    cfg.finish()?;

    let grid = std::sync::Arc::new(Grid::new(d, n)?);
    let params = phys.scheme_params(dt, grid.h())?;
    scheme::step_count(t_end, dt)?;
    let initial = scheme::initial_state(&grid, preset.rho(), preset.velocity(), preset.theta())?;
    let history = scheme::run(initial, &params, t_end, record_every)?;
    if history.records.iter().any(|r| r.dt_exceeds_advective_limit) {
        eprintln!(
            "warning: dt = {dt} exceeds h/max|u|; Picard convergence may degrade"
        );
    }
    let csv = csvio::timeseries_csv(&history.records, record_every);
    let csv_path = write_report(&out_dir, "timeseries.csv", &csv)?;
    println!(
        "run: {} steps to t = {}, {} rows -> {}",
        history.records.len(),
        fmt_short(history.final_state().t),
        csv.lines().count() - 1,
        csv_path.display()
    );
    Ok(RunOutcome { csv_path, history })
}

fn fmt_short(x: f64) -> String {
    format!("{x:.6}")
}

fn parse_dt_rule(cfg: &mut Config, section: &str, default_rule: &str, default_ct: f64) -> Result<DtRule, CliError> {
    let rule = cfg
        .get_str(section, "rule")
        .unwrap_or_else(|| default_rule.to_string());
    let ct = cfg.get_f64(section, "ct")?.unwrap_or(default_ct);
    match rule.as_str() {
        "h" => Ok(DtRule::LinearInH { coeff: ct }),
        "h2" => Ok(DtRule::QuadraticInH { coeff: ct }),
        other => Err(CliError::new(
            "config",
            format!("{section}.rule: expected `h` or `h2`, got `{other}`"),
        )),
    }
}

fn thread_budget(tasks: usize) -> usize {
    let configured = std::env::var("TORUSFV_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v > 0);
    let avail = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    configured.unwrap_or(avail).min(tasks).max(1)
}

/// Run every task resolution concurrently (bounded by `TORUSFV_THREADS`),
/// returning histories in task order. Results are deterministic regardless
/// of scheduling: each run is single-threaded and independent.
fn run_levels(
    cfg: &StudyConfig,
    phys: &PhysicsConfig,
    ic: &InitialData<'_>,
    tasks: &[usize],
) -> Result<Vec<RunHistory>, CliError> {
    let threads = thread_budget(tasks.len());
    let results: Vec<Mutex<Option<Result<RunHistory, CoreError>>>> =
        tasks.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= tasks.len() {
                    break;
                }
                let outcome = execute_level(cfg, phys, ic, tasks[i]);
                *results[i].lock().unwrap() = Some(outcome);
            });
        }
    });
    let mut histories = Vec::with_capacity(tasks.len());
    for slot in results {
        let outcome = slot
            .into_inner()
            .unwrap()
            .expect("worker filled every slot");
        histories.push(outcome?);
    }
    Ok(histories)
}

/// Outcome of `study`: the table and the written report.
pub struct StudyOutcome {
    pub csv_path: PathBuf,
    pub table: StudyTable,
}

pub fn study_command(
    config_path: &Path,
    out_override: Option<&Path>,
) -> Result<StudyOutcome, CliError> {
    let mut cfg = load_config(config_path)?;
    let d = cfg.require_usize("grid", "d")?;
    let levels = cfg.require_usize_list("study", "levels")?;
    let reference_n = cfg.require_usize("study", "reference_n")?;
    let t_end = cfg.require_f64("study", "t_end")?;
    let dt_rule = parse_dt_rule(&mut cfg, "study", "h", 0.5)?;
    let phys = parse_physics(&mut cfg)?;
    let preset = parse_ic(&mut cfg)?;
    let (out_dir, _) = parse_output(&mut cfg, out_override)?;
    cfg.finish()?;

    let study = StudyConfig {
        d,
        levels: levels.clone(),
        reference_n,
        t_end,
        dt_rule,
    };
    let rho = preset.rho();
    let u = preset.velocity();
    let theta = preset.theta();
    let ic = InitialData {
        rho: &rho,
        u: &u,
        theta: &theta,
    };
    let mut tasks = levels;
    tasks.push(reference_n);
    let mut histories = run_levels(&study, &phys, &ic, &tasks)?;
    let reference = histories.pop().expect("reference task present");
    let table = assemble_study(&study, &phys, &histories, &reference)?;
    let csv = csvio::eoc_csv(&table);
    let csv_path = write_report(&out_dir, "eoc.csv", &csv)?;
    println!(
        "study: {} levels vs reference N = {} -> {}",
        table.rows.len(),
        reference_n,
        csv_path.display()
    );
    Ok(StudyOutcome { csv_path, table })
}

/// Outcome of `check`: all property results (also printed line by line).
pub fn check_command(config_path: Option<&Path>) -> Result<Vec<PropertyResult>, CliError> {
    let (seed, trials) = match config_path {
        Some(path) => {
            let mut cfg = load_config(path)?;
            cfg.allow_section("check");
            let seed = cfg.get_u64("check", "seed")?.unwrap_or(42);
            let trials = cfg.get_usize("check", "trials")?.unwrap_or(100);
            cfg.finish()?;
            (seed, trials)
        }
        None => (42, 100),
    };
    let results = run_invariant_suite(seed, trials);
    let mut all_passed = true;
    for r in &results {
        println!(
            "property {}: {} (metric {:.3e}, tolerance {:.3e}, {} trials)",
            r.name,
            if r.passed { "pass" } else { "FAIL" },
            r.metric,
            r.tolerance,
            r.trials
        );
        all_passed &= r.passed;
    }
    if all_passed {
        Ok(results)
    } else {
        Err(CliError::new("check", "one or more properties failed"))
    }
}

/// Outcome of `consistency`: per-level reports and the written CSV.
pub struct ConsistencyOutcome {
    pub csv_path: PathBuf,
    pub rows: Vec<(usize, ConsistencyReport)>,
}

pub fn consistency_command(
    config_path: &Path,
    out_override: Option<&Path>,
) -> Result<ConsistencyOutcome, CliError> {
    let mut cfg = load_config(config_path)?;
    let d = cfg.require_usize("grid", "d")?;
    let levels = cfg.require_usize_list("consistency", "levels")?;
    let t_end = cfg.require_f64("consistency", "t_end")?;
    let tau = cfg.get_f64("consistency", "tau")?.unwrap_or(t_end);
    let dt_rule = parse_dt_rule(&mut cfg, "consistency", "h2", 1.0)?;
    let phys = parse_physics(&mut cfg)?;
    let preset = parse_ic(&mut cfg)?;
    let (out_dir, _) = parse_output(&mut cfg, out_override)?;
    cfg.finish()?;

    let mut rows = Vec::with_capacity(levels.len());
    for &n in &levels {
        let grid = std::sync::Arc::new(Grid::new(d, n)?);
        let dt = dt_rule.dt(grid.h());
        let params = phys.scheme_params(dt, grid.h())?;
        let initial =
            scheme::initial_state(&grid, preset.rho(), preset.velocity(), preset.theta())?;
        let history = scheme::run(initial, &params, t_end, 1)
            .map_err(|e| CliError::new("solver", format!("level N = {n}: {e}")))?;
        let phi = canonical_scalar(d);
        let phis = canonical_vector(d);
        let report = consistency_report(&history, &phi, &phis, &TestFunction::one(), tau, &params)?;
        println!(
            "consistency N = {n}: e_rho = {:.3e}, |e_m| = {:.3e}, e_s = {:+.3e}",
            report.e_rho, report.e_m_norm, report.e_s_signed
        );
        rows.push((n, report));
    }
    let csv = csvio::consistency_csv(&rows);
    let csv_path = write_report(&out_dir, "consistency.csv", &csv)?;
    println!("consistency: {} levels -> {}", rows.len(), csv_path.display());
    Ok(ConsistencyOutcome { csv_path, rows })
}
