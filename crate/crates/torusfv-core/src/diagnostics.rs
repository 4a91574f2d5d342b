//! Per-step structure-preservation diagnostics.
//!
//! [`record`] evaluates everything the scheme provably balances: total mass,
//! kinetic/internal energy, the four dissipation terms of the discrete
//! energy identity and its residual, the aggregate entropy production, and
//! the realized bounds of density, temperature, entropy and pressure (the
//! monitored windows of the uniform-bound assumption).
//!
//! [`hessian_bounds_check`] sweeps the closed-form entropy Hessian
//! eigenvalues of a state against their lower/upper bounds.

use crate::fields::upwind_of;
use crate::math;
use crate::operators;
use crate::scheme::{SchemeParams, State, StepStats};
use crate::thermo::{
    entropy, entropy_hessian_eigenvalues, pressure, GasParams, HessianBounds,
};

/// Balance terms and extrema of one accepted time step.
#[derive(Debug, Clone, Copy)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub time: f64,
    pub mass: f64,
    pub kinetic_energy: f64,
    pub internal_energy: f64,
    pub total_energy: f64,
    /// `h^eps * sum_faces |sigma| <rho> |[[u]]|^2`.
    pub diss_eps: f64,
    /// `dt/2 * int rho_old |D_t u|^2`.
    pub diss_dt: f64,
    /// `1/2 * sum_faces |sigma| rho_up |<u>.n| |[[u]]|^2`.
    pub diss_upwind: f64,
    /// `h^alpha * int |grad_E u|^2` (zero when disabled).
    pub diss_alpha: f64,
    /// `|D_t(total energy) + sum of the dissipation terms|`.
    pub energy_residual: f64,
    /// Aggregate entropy production; nonnegative up to solver tolerance.
    pub entropy_production: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub entropy_min: f64,
    pub entropy_max: f64,
    pub pressure_min: f64,
    pub pressure_max: f64,
    pub picard_iterations: usize,
    pub picard_increment: f64,
    pub dt_exceeds_advective_limit: bool,
}

/// Evaluate the diagnostics for one step `previous -> current`.
///
/// Every field is a direct summation over cells or faces of the two states;
/// recomputation is bit-identical.
pub fn record(
    previous: &State,
    current: &State,
    params: &SchemeParams,
    stats: &StepStats,
    step: usize,
) -> DiagnosticsRecord {
    let grid = &current.grid;
    let d = grid.dim();
    let nc = grid.n_cells();
    let vol = grid.cell_volume();
    let area = grid.face_area();
    let cv = params.gas.c_v;
    let dt = params.dt;
    let h_alpha = params.h_pow_alpha();

    let mut mass = 0.0;
    let mut kin_new = 0.0;
    let mut int_new = 0.0;
    let mut kin_old = 0.0;
    let mut int_old = 0.0;
    let mut diss_dt = 0.0;
    let mut entropy_dt = 0.0;
    let mut stress_work = 0.0;

    let grad_u = operators::grad_vector(grid, &current.u);
    let mut rho_min = f64::INFINITY;
    let mut rho_max = f64::NEG_INFINITY;
    let mut theta_min = f64::INFINITY;
    let mut theta_max = f64::NEG_INFINITY;
    let mut s_min = f64::INFINITY;
    let mut s_max = f64::NEG_INFINITY;
    let mut p_min = f64::INFINITY;
    let mut p_max = f64::NEG_INFINITY;

    for k in 0..nc {
        let rho = current.rho.data[k];
        let theta = current.theta.data[k];
        let rho_old = previous.rho.data[k];
        let theta_old = previous.theta.data[k];
        mass += rho;
        let mut speed2_new = 0.0;
        let mut speed2_old = 0.0;
        let mut ddu2 = 0.0;
        for j in 0..d {
            let un = current.u.comps[j].data[k];
            let uo = previous.u.comps[j].data[k];
            speed2_new += un * un;
            speed2_old += uo * uo;
            ddu2 += (un - uo) * (un - uo);
        }
        kin_new += 0.5 * rho * speed2_new;
        kin_old += 0.5 * rho_old * speed2_old;
        int_new += cv * rho * theta;
        int_old += cv * rho_old * theta_old;
        diss_dt += 0.5 / dt * rho_old * ddu2;

        let s_new = entropy(rho, theta, &params.gas);
        let s_old = entropy(rho_old, theta_old, &params.gas);
        entropy_dt += (rho * s_new - rho_old * s_old) / dt;

        // S : grad u / theta at the current level.
        let mut w = 0.0;
        let tr = grad_u.trace_at(k);
        for j in 0..d {
            for i in 0..d {
                let sym = grad_u.entry(j, i, k) + grad_u.entry(i, j, k);
                let sij = params.mu * sym + if i == j { params.lambda * tr } else { 0.0 };
                w += sij * grad_u.entry(j, i, k);
            }
        }
        stress_work += w / theta;

        let p = pressure(rho, theta);
        rho_min = rho_min.min(rho);
        rho_max = rho_max.max(rho);
        theta_min = theta_min.min(theta);
        theta_max = theta_max.max(theta);
        s_min = s_min.min(s_new);
        s_max = s_max.max(s_new);
        p_min = p_min.min(p);
        p_max = p_max.max(p);
    }
    mass *= vol;
    kin_new *= vol;
    kin_old *= vol;
    int_new *= vol;
    int_old *= vol;
    diss_dt *= vol;
    entropy_dt *= vol;
    stress_work *= vol;

    // Face sums: eps-diffusion, upwind dissipation, alpha-dissipation and
    // the kappa part of the entropy balance.
    let mut diss_eps = 0.0;
    let mut diss_up = 0.0;
    let mut diss_alpha = 0.0;
    let mut kappa_term = 0.0;
    for axis in 0..d {
        let plus = grid.plus_table(axis);
        let uax = &current.u.comps[axis].data;
        for k in 0..nc {
            let p = plus[k] as usize;
            let mut jump2 = 0.0;
            for j in 0..d {
                let c = &current.u.comps[j].data;
                let jump = c[p] - c[k];
                jump2 += jump * jump;
            }
            let rho_avg = 0.5 * (current.rho.data[k] + current.rho.data[p]);
            let speed = 0.5 * (uax[k] + uax[p]);
            let rho_up = upwind_of(current.rho.data[k], current.rho.data[p], speed);
            diss_eps += rho_avg * jump2;
            diss_up += rho_up * math::abs(speed) * jump2;
            diss_alpha += jump2;
            let jt = current.theta.data[p] - current.theta.data[k];
            // [[1/theta]] = -[[theta]] / (theta_in theta_out).
            kappa_term -= jt * jt / (current.theta.data[k] * current.theta.data[p]);
        }
    }
    diss_eps *= params.flux.h_pow_eps * area;
    diss_up *= 0.5 * area;
    // |D_sigma| |[[u]]/h|^2 = |sigma| |[[u]]|^2 / h.
    diss_alpha *= h_alpha * area / grid.h();
    kappa_term *= params.kappa / grid.h() * area;

    let total_new = kin_new + int_new;
    let total_old = kin_old + int_old;
    let energy_residual = math::abs(
        (total_new - total_old) / dt + diss_eps + diss_dt + diss_up + diss_alpha,
    );
    let entropy_production = entropy_dt + kappa_term - stress_work;

    DiagnosticsRecord {
        step,
        time: current.t,
        mass,
        kinetic_energy: kin_new,
        internal_energy: int_new,
        total_energy: total_new,
        diss_eps,
        diss_dt,
        diss_upwind: diss_up,
        diss_alpha,
        energy_residual,
        entropy_production,
        rho_min,
        rho_max,
        theta_min,
        theta_max,
        entropy_min: s_min,
        entropy_max: s_max,
        pressure_min: p_min,
        pressure_max: p_max,
        picard_iterations: stats.iterations,
        picard_increment: stats.final_increment,
        dt_exceeds_advective_limit: stats.dt_exceeds_advective_limit,
    }
}

/// Worst-case eigenvalue margins of the entropy Hessian over a state.
#[derive(Debug, Clone, Copy)]
pub struct HessianMargins {
    /// `min_K (lambda_1 - lower bound)`; positive when the bound holds.
    pub lower: f64,
    /// `min_K (upper bound - lambda_2)`; positive when the bound holds.
    pub upper: f64,
}

/// Check the entropy Hessian eigenvalue bounds over all cells of a state.
pub fn hessian_bounds_check(state: &State, gas: &GasParams) -> HessianMargins {
    let mut lower = f64::INFINITY;
    let mut upper = f64::INFINITY;
    for k in 0..state.grid.n_cells() {
        let rho = state.rho.data[k];
        let theta = state.theta.data[k];
        let (l1, l2) = entropy_hessian_eigenvalues(rho, theta, gas);
        let bounds = HessianBounds::new(rho, theta, gas);
        lower = lower.min(l1 - bounds.lower);
        upper = upper.min(bounds.upper - l2);
    }
    HessianMargins { lower, upper }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Grid;
    use crate::scheme::{initial_state, run, SchemeParams};
    use crate::thermo::GasParams;
    use alloc::sync::Arc;
    use core::f64::consts::PI;

    fn params(grid: &Grid, dt: f64) -> SchemeParams {
        SchemeParams::new(GasParams::new(1.4).unwrap(), 0.1, 0.0, 0.01, 0.0, dt, grid.h())
            .unwrap()
    }

    #[test]
    fn uniform_stationary_state_balances_exactly() {
        let grid = Arc::new(Grid::new(2, 4).unwrap());
        let s = initial_state(&grid, |_| 1.0, |_, _| 0.0, |_| 1.0).unwrap();
        let p = params(&grid, 0.05);
        let h = run(s, &p, 0.25, 1).unwrap();
        for r in &h.records {
            assert!(r.diss_eps == 0.0 && r.diss_dt == 0.0 && r.diss_upwind == 0.0);
            assert!(r.energy_residual < 1e-13);
            assert!(r.entropy_production.abs() < 1e-13);
            assert!((r.mass - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn smooth_wave_balances_within_solver_tolerance() {
        // Both signs of the flux exponent and a nonzero bulk viscosity.
        for (eps, lambda) in [(0.0, 0.0), (-0.4, 0.1), (0.5, 0.0)] {
            smooth_wave_balance_case(eps, lambda);
        }
    }

    fn smooth_wave_balance_case(eps: f64, lambda: f64) {
        let grid = Arc::new(Grid::new(2, 16).unwrap());
        let s = initial_state(
            &grid,
            |x| 1.0 + 0.2 * (2.0 * PI * x[0]).sin(),
            |x, j| 0.1 * (2.0 * PI * x[(j + 1) % 2]).sin(),
            |x| 1.0 + 0.1 * (2.0 * PI * x[0]).cos(),
        )
        .unwrap();
        let p = SchemeParams::new(
            GasParams::new(1.4).unwrap(),
            0.1,
            lambda,
            0.01,
            eps,
            grid.h(),
            grid.h(),
        )
        .unwrap();
        let mass0 = 1.0;
        let h = run(s, &p, 8.0 * grid.h(), 1).unwrap();
        for r in &h.records {
            // Mass conservation to round-off.
            assert!((r.mass - mass0).abs() <= 1e-12 * mass0, "drift {:.3e}", r.mass - mass0);
            // Energy identity closes to within ~10 picard_tol.
            assert!(
                r.energy_residual <= 10.0 * p.picard_tol,
                "energy residual {:.3e} at step {}",
                r.energy_residual,
                r.step
            );
            // Entropy production nonnegative up to solver error.
            assert!(
                r.entropy_production >= -1e-10,
                "entropy production {:.3e} at step {}",
                r.entropy_production,
                r.step
            );
            // All dissipation terms carry the sign of dissipation.
            assert!(r.diss_eps >= 0.0 && r.diss_dt >= 0.0 && r.diss_upwind >= 0.0);
            assert!(r.rho_min > 0.0 && r.theta_min > 0.0);
            // Energy split is exact.
            assert!((r.kinetic_energy + r.internal_energy - r.total_energy).abs() < 1e-15);
        }
    }

    #[test]
    fn kappa_part_of_entropy_production_is_nonpositive() {
        // The kappa/h [[theta]][[1/theta]] sum is <= 0 identically; verify
        // by direct summation on a rough temperature field.
        let grid = Arc::new(Grid::new(2, 8).unwrap());
        let s = initial_state(
            &grid,
            |_| 1.0,
            |_, _| 0.0,
            |x| 1.0 + 0.3 * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).sin(),
        )
        .unwrap();
        let mut sum = 0.0;
        for face in grid.faces() {
            let t = crate::fields::face_traces(&s.theta, &face);
            let jump_inv = 1.0 / t.v_out - 1.0 / t.v_in;
            sum += grid.face_area() * 0.01 / grid.h() * t.jump * jump_inv;
        }
        assert!(sum <= 0.0);
    }

    #[test]
    fn record_is_pure() {
        let grid = Arc::new(Grid::new(2, 8).unwrap());
        let s = initial_state(
            &grid,
            |x| 1.0 + 0.1 * (2.0 * PI * x[1]).sin(),
            |x, _| 0.05 * (2.0 * PI * x[0]).cos(),
            |_| 1.0,
        )
        .unwrap();
        let p = params(&grid, grid.h() / 2.0);
        let (next, stats) = crate::scheme::step(&s, &p).unwrap();
        let a = record(&s, &next, &p, &stats, 1);
        let b = record(&s, &next, &p, &stats, 1);
        assert_eq!(a.energy_residual.to_bits(), b.energy_residual.to_bits());
        assert_eq!(a.entropy_production.to_bits(), b.entropy_production.to_bits());
        assert_eq!(a.mass.to_bits(), b.mass.to_bits());
    }

    #[test]
    fn entropy_and_pressure_stay_in_implied_windows() {
        // Pointwise p = rho theta and s = c_v ln theta - ln rho force the
        // realized extrema into the boxes implied by the density and
        // temperature windows.
        let grid = Arc::new(Grid::new(2, 16).unwrap());
        let s = initial_state(
            &grid,
            |x| 1.0 + 0.2 * (2.0 * PI * x[0]).sin(),
            |x, j| 0.1 * (2.0 * PI * x[(j + 1) % 2]).sin(),
            |x| 1.0 + 0.1 * (2.0 * PI * x[0]).cos(),
        )
        .unwrap();
        let p = params(&grid, grid.h() / 2.0);
        let cv = p.gas.c_v;
        let h = run(s, &p, 4.0 * p.dt, 1).unwrap();
        for r in &h.records {
            assert!(r.pressure_min >= r.rho_min * r.theta_min - 1e-14);
            assert!(r.pressure_max <= r.rho_max * r.theta_max + 1e-14);
            assert!(r.entropy_min >= cv * r.theta_min.ln() - r.rho_max.ln() - 1e-14);
            assert!(r.entropy_max <= cv * r.theta_max.ln() - r.rho_min.ln() + 1e-14);
        }
    }

    #[test]
    fn hessian_margins_positive_on_admissible_states() {
        let grid = Arc::new(Grid::new(2, 8).unwrap());
        let gas = GasParams::new(1.4).unwrap();
        let s = initial_state(
            &grid,
            |x| 1.0 + 0.5 * (2.0 * PI * x[0]).sin(),
            |_, _| 0.0,
            |x| 2.0 + (2.0 * PI * x[1]).cos(),
        )
        .unwrap();
        let m = hessian_bounds_check(&s, &gas);
        assert!(m.lower > 0.0);
        assert!(m.upper > 0.0);
    }
}
