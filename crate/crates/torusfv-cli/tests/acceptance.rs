//! Acceptance gate: every release-blocking property of the solver, one test
//! per criterion, each printing a single pass/fail line with its metrics.
//!
//! Tolerances are pinned here, not configurable: they are the contract.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use torusfv_core::consistency::{canonical_scalar, entropy_defect, mass_defect, TestFunction};
use torusfv_core::convergence::{
    eoc_regression, run_study, DtRule, InitialData, PhysicsConfig, StudyConfig, StudyTable,
};
use torusfv_core::checks::run_invariant_suite;
use torusfv_core::fields::project_q;
use torusfv_core::mesh::Grid;
use torusfv_core::operators::grad_e;
use torusfv_core::scheme::{initial_state, run, SchemeParams};
use torusfv_core::thermo::{
    entropy_hessian_eigenvalues, GasParams, HessianBounds,
};

fn gas() -> GasParams {
    GasParams::new(1.4).unwrap()
}

fn smooth_wave_ic() -> (
    impl Fn(&[f64]) -> f64 + Sync,
    impl Fn(&[f64], usize) -> f64 + Sync,
    impl Fn(&[f64]) -> f64 + Sync,
) {
    (
        |x: &[f64]| 1.0 + 0.2 * (2.0 * PI * x[0]).sin(),
        |x: &[f64], j: usize| 0.1 * (2.0 * PI * x[(j + 1) % x.len()]).sin(),
        |x: &[f64]| 1.0 + 0.1 * (2.0 * PI * x[0]).cos(),
    )
}

fn physics(eps: f64, alpha: Option<f64>) -> PhysicsConfig {
    PhysicsConfig {
        gas: gas(),
        mu: 0.1,
        lambda: 0.0,
        kappa: 0.01,
        eps,
        alpha,
        picard_tol: 1e-10,
        picard_max: 200,
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

#[test]
fn criterion_1_discrete_calculus_suite() {
    let start = Instant::now();
    let results = run_invariant_suite(42, 100);
    let identity_names = [
        "duality-grad-div",
        "duality-laplace",
        "duality-projection",
        "jump-product-rule",
        "flux-telescoping",
        "laplace-composition",
    ];
    let mut worst: f64 = 0.0;
    for name in identity_names {
        let r = results
            .iter()
            .find(|r| r.name == name)
            .expect("property present");
        worst = worst.max(r.metric);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = worst <= 1e-12 && elapsed <= 5.0;
    println!(
        "acceptance 1 (discrete calculus suite): {} - worst relative residual {:.3e} \
         (tolerance 1e-12), {:.2} s",
        verdict(ok),
        worst,
        elapsed
    );
    assert!(worst <= 1e-12, "worst residual {worst:.3e}");
    assert!(elapsed <= 5.0, "suite took {elapsed:.1} s");
}

#[test]
fn criterion_2_structure_preservation() {
    let start = Instant::now();
    let grid = Arc::new(Grid::new(2, 32).unwrap());
    let params = SchemeParams::new(gas(), 0.1, 0.0, 0.01, 0.0, grid.h() / 2.0, grid.h()).unwrap();
    let (rho0, u0, theta0) = smooth_wave_ic();
    let initial = initial_state(&grid, rho0, u0, theta0).unwrap();
    let t_end = 200.0 * params.dt;
    let history = run(initial, &params, t_end, 200).unwrap();
    assert_eq!(history.records.len(), 200);

    let mass0 = history.states[0].rho.integral(&grid);
    let mut worst_drift: f64 = 0.0;
    let mut worst_energy: f64 = 0.0;
    let mut worst_entropy: f64 = f64::INFINITY;
    let mut min_rho: f64 = f64::INFINITY;
    let mut min_theta: f64 = f64::INFINITY;
    for r in &history.records {
        worst_drift = worst_drift.max((r.mass - mass0).abs() / mass0);
        worst_energy = worst_energy.max(r.energy_residual);
        worst_entropy = worst_entropy.min(r.entropy_production);
        min_rho = min_rho.min(r.rho_min);
        min_theta = min_theta.min(r.theta_min);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = worst_drift <= 1e-12
        && worst_energy <= 10.0 * params.picard_tol
        && worst_entropy >= -1e-9
        && min_rho > 0.0
        && min_theta > 0.0
        && elapsed <= 120.0;
    println!(
        "acceptance 2 (structure preservation, 200 steps): {} - mass drift {:.2e} (<= 1e-12), \
         energy residual {:.2e} (<= 1e-9), min entropy production {:+.2e} (>= -1e-9), \
         min rho {:.3}, min theta {:.3}, {:.1} s",
        verdict(ok),
        worst_drift,
        worst_energy,
        worst_entropy,
        min_rho,
        min_theta,
        elapsed
    );
    assert!(worst_drift <= 1e-12, "mass drift {worst_drift:.3e}");
    assert!(
        worst_energy <= 10.0 * params.picard_tol,
        "energy residual {worst_energy:.3e}"
    );
    assert!(worst_entropy >= -1e-9, "entropy production {worst_entropy:.3e}");
    assert!(min_rho > 0.0 && min_theta > 0.0, "positivity lost");
    assert!(elapsed <= 120.0, "took {elapsed:.1} s");
}

#[test]
fn criterion_3_hessian_eigenvalue_bounds() {
    let start = Instant::now();
    let g = gas();
    let mut rng = torusfv_core::rng::SplitMix64::new(0xB0DDED);
    let mut violations = 0usize;
    let mut min_margin = f64::INFINITY;
    for _ in 0..100_000 {
        let rho = rng.uniform(0.1, 10.0);
        let theta = rng.uniform(0.1, 10.0);
        let (l1, l2) = entropy_hessian_eigenvalues(rho, theta, &g);
        let b = HessianBounds::new(rho, theta, &g);
        if !(b.lower < l1 && l2 < b.upper) {
            violations += 1;
        }
        min_margin = min_margin.min(l1 - b.lower).min(b.upper - l2);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = violations == 0 && elapsed <= 1.0;
    println!(
        "acceptance 3 (entropy Hessian bounds, 1e5 samples): {} - {} violations, \
         smallest margin {:.3e}, {:.2} s",
        verdict(ok),
        violations,
        min_margin,
        elapsed
    );
    assert_eq!(violations, 0);
    assert!(elapsed <= 1.0, "took {elapsed:.2} s");
}

#[test]
fn criterion_4_stationarity() {
    let grid = Arc::new(Grid::new(2, 16).unwrap());
    let params = SchemeParams::new(gas(), 0.1, 0.0, 0.01, 0.0, grid.h() / 2.0, grid.h()).unwrap();
    let initial = initial_state(&grid, |_| 1.0, |_, _| 0.0, |_| 1.0).unwrap();
    let history = run(initial, &params, 100.0 * params.dt, 100).unwrap();
    let last = history.final_state();
    let mut drift: f64 = 0.0;
    for k in 0..grid.n_cells() {
        drift = drift
            .max((last.rho.data[k] - 1.0).abs())
            .max((last.theta.data[k] - 1.0).abs());
        for j in 0..2 {
            drift = drift.max(last.u.comps[j].data[k].abs());
        }
    }
    let ok = drift <= 1e-13;
    println!(
        "acceptance 4 (stationarity, 100 steps): {} - max drift {:.3e} (<= 1e-13)",
        verdict(ok),
        drift
    );
    assert!(drift <= 1e-13, "drift {drift:.3e}");
}

#[test]
fn criterion_5_projection_interpolation_orders() {
    // Pi_W face-mean projection: sup |phi - Pi_W phi| for phi_i = sin(2 pi x_i).
    let mut proj_errs: Vec<(f64, f64)> = Vec::new();
    let mut grad_errs: Vec<(f64, f64)> = Vec::new();
    for n in [8usize, 16, 32, 64] {
        let grid = Grid::new(2, n).unwrap();
        let w = torusfv_core::fields::project_w(&grid, |x, i| (2.0 * PI * x[i]).sin());
        let mut sup: f64 = 0.0;
        for face in grid.faces() {
            let c = grid.face_center(face.index);
            for s in [-0.5, -0.25, 0.25, 0.5] {
                let xi = c[face.axis] + s * grid.h();
                sup = sup.max(((2.0 * PI * xi).sin() - w.data[face.index]).abs());
            }
        }
        proj_errs.push((grid.h(), sup));

        // grad_e of the cell projection against the true gradient.
        let phi = project_q(&grid, |x: &[f64]| (2.0 * PI * x[0]).sin());
        let ge = grad_e(&grid, &phi);
        let mut sup_g: f64 = 0.0;
        for face in grid.faces() {
            if face.axis != 0 {
                continue;
            }
            let c = grid.face_center(face.index);
            for s in [-0.5, -0.25, 0.0, 0.25, 0.5] {
                let x = c[0] + s * grid.h();
                let exact = 2.0 * PI * (2.0 * PI * x).cos();
                sup_g = sup_g.max((ge.data[face.index] - exact).abs());
            }
        }
        grad_errs.push((grid.h(), sup_g));
    }
    let proj_rates = torusfv_core::convergence::eoc(&proj_errs);
    let grad_rates = torusfv_core::convergence::eoc(&grad_errs);
    let min_proj = proj_rates.iter().map(|r| r.unwrap()).fold(f64::INFINITY, f64::min);
    let min_grad = grad_rates.iter().map(|r| r.unwrap()).fold(f64::INFINITY, f64::min);
    let ok = min_proj >= 0.9 && min_grad >= 0.9;
    println!(
        "acceptance 5 (projection/interpolation orders): {} - Pi_W EOC >= {:.3}, \
         grad_E Pi_Q EOC >= {:.3} (both required >= 0.9)",
        verdict(ok),
        min_proj,
        min_grad
    );
    assert!(min_proj >= 0.9, "Pi_W EOC {min_proj:.3}");
    assert!(min_grad >= 0.9, "grad_E Pi_Q EOC {min_grad:.3}");
}

#[test]
fn criterion_6_consistency_orders() {
    let start = Instant::now();
    let tau = 1.0 / 32.0;
    let (rho0, u0, theta0) = smooth_wave_ic();
    let phi = canonical_scalar(2);
    let mut series: Vec<(f64, f64)> = Vec::new();
    let mut worst_es = f64::INFINITY;
    for n in [8usize, 16, 32, 64] {
        let grid = Arc::new(Grid::new(2, n).unwrap());
        let dt = grid.h() * grid.h();
        let params = SchemeParams::new(gas(), 0.1, 0.0, 0.01, 0.0, dt, grid.h()).unwrap();
        let initial = initial_state(&grid, &rho0, &u0, &theta0).unwrap();
        let history = run(initial, &params, tau, 1).unwrap();
        let e_rho = mass_defect(&history, &phi, tau).unwrap();
        series.push((grid.h(), e_rho.abs()));
        let e_s = entropy_defect(&history, &TestFunction::one(), tau, &params).unwrap();
        worst_es = worst_es.min(e_s);
    }
    let rates = torusfv_core::convergence::eoc(&series);
    let min_rate = rates
        .iter()
        .map(|r| r.unwrap_or(f64::NEG_INFINITY))
        .fold(f64::INFINITY, f64::min);
    let slope = eoc_regression(&series).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let ok = min_rate >= 0.8 && worst_es >= -1e-8;
    println!(
        "acceptance 6 (consistency orders, dt = h^2): {} - e_rho EOC min {:.3} \
         (>= 0.8, regression {:.3}), signed e_s(1) >= {:+.3e} (>= -1e-8), {:.1} s",
        verdict(ok),
        min_rate,
        slope,
        worst_es,
        elapsed
    );
    assert!(min_rate >= 0.8, "e_rho EOC {min_rate:.3} ({series:?})");
    assert!(worst_es >= -1e-8, "e_s defect {worst_es:.3e}");
}

fn convergence_study(eps: f64, alpha: Option<f64>) -> StudyTable {
    let cfg = StudyConfig {
        d: 2,
        levels: vec![16, 32, 64],
        reference_n: 256,
        t_end: 0.125,
        dt_rule: DtRule::LinearInH { coeff: 0.5 },
    };
    let (rho0, u0, theta0) = smooth_wave_ic();
    let ic = InitialData {
        rho: &rho0,
        u: &u0,
        theta: &theta0,
    };
    run_study(&cfg, &physics(eps, alpha), &ic).unwrap()
}

fn min_rate(rates: &[Option<f64>]) -> f64 {
    rates
        .iter()
        .flatten()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn criterion_7_convergence_rates() {
    let start = Instant::now();
    let table = convergence_study(0.0, None);
    let r_rho = min_rate(&table.rates_rho);
    let r_u = min_rate(&table.rates_u);
    let r_theta = min_rate(&table.rates_theta);
    let re: Vec<f64> = table.rows.iter().map(|r| r.report.rel_energy_sup).collect();
    let monotone = re.windows(2).all(|w| w[1] < w[0]);
    // Gradient-error rates are reported, not gated.
    let grad_u_series: Vec<(f64, f64)> = table
        .rows
        .iter()
        .map(|r| (r.h, r.report.grad_u_l2l2))
        .collect();
    let grad_theta_series: Vec<(f64, f64)> = table
        .rows
        .iter()
        .map(|r| (r.h, r.report.grad_theta_l2l2))
        .collect();
    let elapsed = start.elapsed().as_secs_f64();
    let ok = r_rho >= 0.25 && r_u >= 0.25 && r_theta >= 0.25 && monotone && elapsed <= 900.0;
    println!(
        "acceptance 7 (convergence rates, eps = 0): {} - EOC rho {:.3}, u {:.3}, theta {:.3} \
         (each >= 0.25), sup relative energy {:?} monotone: {}, gradient rates (reported): \
         grad_u {:.3}, grad_theta {:.3}, {:.0} s (<= 900)",
        verdict(ok),
        r_rho,
        r_u,
        r_theta,
        re,
        monotone,
        eoc_regression(&grad_u_series).unwrap_or(f64::NAN),
        eoc_regression(&grad_theta_series).unwrap_or(f64::NAN),
        elapsed
    );
    assert!(r_rho >= 0.25, "rho EOC {r_rho:.3}");
    assert!(r_u >= 0.25, "u EOC {r_u:.3}");
    assert!(r_theta >= 0.25, "theta EOC {r_theta:.3}");
    assert!(monotone, "relative energy not monotone: {re:?}");
    assert!(elapsed <= 900.0, "took {elapsed:.0} s");
}

#[test]
fn criterion_8_artificial_viscosity_variant() {
    let start = Instant::now();
    let alpha = 2.0 / 3.0;
    let table = convergence_study(1.0 / 3.0, Some(alpha));
    let r_rho = min_rate(&table.rates_rho);
    let r_u = min_rate(&table.rates_u);
    let r_theta = min_rate(&table.rates_theta);
    let bound = 1.0 / 3.0;
    let all_positive = table.rows.iter().all(|r| r.alpha_dissipation > 0.0);
    // The alpha-dissipation column against h^alpha |grad_E u|^2: regression
    // of their log-ratio over log h recovers alpha.
    let ratio_series: Vec<(f64, f64)> = table
        .rows
        .iter()
        .map(|r| (r.h, r.alpha_dissipation / r.grad_e_u_sq))
        .collect();
    let slope = eoc_regression(&ratio_series).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let ok = r_rho >= bound
        && r_u >= bound
        && r_theta >= bound
        && all_positive
        && (slope - alpha).abs() <= 0.3;
    println!(
        "acceptance 8 (alpha variant, alpha = 2/3, eps = 1/3): {} - EOC rho {:.3}, u {:.3}, \
         theta {:.3} (each >= 1/3), alpha-dissipation positive: {}, log-log slope {:.3} \
         (within 2/3 +- 0.3), {:.0} s",
        verdict(ok),
        r_rho,
        r_u,
        r_theta,
        all_positive,
        slope,
        elapsed
    );
    assert!(r_rho >= bound, "rho EOC {r_rho:.3}");
    assert!(r_u >= bound, "u EOC {r_u:.3}");
    assert!(r_theta >= bound, "theta EOC {r_theta:.3}");
    assert!(all_positive, "alpha dissipation not positive");
    assert!(
        (slope - alpha).abs() <= 0.3,
        "alpha scaling slope {slope:.3} vs {alpha:.3}"
    );
}

#[test]
fn criterion_9_determinism() {
    let dir = std::env::temp_dir().join("torusfv-acceptance-determinism");
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    let config = dir.join("run.ini");
    std::fs::write(
        &config,
        "[grid]\nd = 2\nn = 8\n\n[time]\ndt = 0.0625\nt_end = 0.25\n\n\
         [physics]\ngamma = 1.4\nmu = 0.1\nlambda = 0.0\nkappa = 0.01\n\n\
         [scheme]\neps = 0.0\n\n[ic]\npreset = smooth-wave\n",
    )
    .unwrap();
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    torusfv_cli::run_command(&config, Some(&out_a)).unwrap();
    torusfv_cli::run_command(&config, Some(&out_b)).unwrap();
    let a = std::fs::read(out_a.join("timeseries.csv")).unwrap();
    let b = std::fs::read(out_b.join("timeseries.csv")).unwrap();
    let ok = a == b && !a.is_empty();
    println!(
        "acceptance 9 (determinism): {} - two executions byte-identical ({} bytes)",
        verdict(ok),
        a.len()
    );
    assert!(!a.is_empty());
    assert_eq!(a, b, "reruns differ");
}
