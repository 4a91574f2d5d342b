//! One fully implicit time step of the finite volume method and the time
//! loop around it.
//!
//! The unknowns of a step are the conservative products `rho`, `rho u`,
//! `c_v rho theta`; primitive velocity and temperature are recovered by
//! division after each sweep. The nonlinear algebraic system is solved by a
//! Gauss-Seidel Picard iteration: continuity for the density with frozen
//! velocity, momentum with the updated density and frozen convective
//! velocity and pressure linearization, then temperature. Each sub-system
//! is linear in its unknown and solved matrix-free to near round-off, which
//! is what keeps mass conservation and the energy balance residual at the
//! level of the Picard tolerance.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::fields::{ScalarField, TensorField, VectorField};
use crate::flux::{diffusive_kernel, FluxParams};
use crate::linsolve::bicgstab;
use crate::math;
use crate::mesh::Grid;
use crate::operators;
use crate::thermo::{pressure, GasParams};

/// Relative residual targets for the inner linear solves. The continuity
/// solve is pushed to the round-off floor so the telescoping mass identity
/// survives hundreds of steps; the other blocks follow the Picard tolerance.
const CONTINUITY_TOL: f64 = 1e-14;
const MOMENTUM_TOL: f64 = 5e-14;
const TEMPERATURE_TOL: f64 = 5e-14;
const INNER_MAX_ITER: usize = 2000;

/// Discrete state `(rho_h, u_h, theta_h)` at one time level.
#[derive(Debug, Clone)]
pub struct State {
    pub rho: ScalarField,
    pub u: VectorField,
    pub theta: ScalarField,
    pub t: f64,
    pub grid: Arc<Grid>,
}

impl State {
    /// Check the positivity invariants (density and temperature).
    pub fn is_admissible(&self) -> bool {
        self.rho.min() > 0.0 && self.theta.min() > 0.0
    }

    /// Largest velocity magnitude over all cells.
    pub fn max_speed(&self) -> f64 {
        (0..self.grid.n_cells())
            .map(|k| self.u.norm_at(k))
            .fold(0.0, f64::max)
    }
}

/// Physical and numerical parameters of the scheme.
#[derive(Debug, Clone)]
pub struct SchemeParams {
    pub gas: GasParams,
    /// Shear viscosity, `mu > 0`.
    pub mu: f64,
    /// Bulk viscosity coefficient, `lambda >= 0`.
    pub lambda: f64,
    /// Heat conductivity, `kappa > 0`.
    pub kappa: f64,
    pub flux: FluxParams,
    pub dt: f64,
    /// Artificial-viscosity exponent; disabled when `None`.
    pub alpha: Option<f64>,
    /// Relative l2 increment tolerance of the Picard sweep.
    pub picard_tol: f64,
    pub picard_max: usize,
}

impl SchemeParams {
    /// Assemble with the default solver controls
    /// (`picard_tol = 1e-10`, `picard_max = 200`).
    pub fn new(
        gas: GasParams,
        mu: f64,
        lambda: f64,
        kappa: f64,
        eps: f64,
        dt: f64,
        h: f64,
    ) -> Result<Self> {
        let params = Self {
            gas,
            mu,
            lambda,
            kappa,
            flux: FluxParams::new(eps, h)?,
            dt,
            alpha: None,
            picard_tol: 1e-10,
            picard_max: 200,
        };
        params.validate()?;
        Ok(params)
    }

    /// Enable the artificial-viscosity term `h^alpha` in the momentum
    /// equation.
    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha,
            });
        }
        self.alpha = Some(alpha);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) {
            return Err(Error::InvalidParameter {
                name: "mu",
                value: self.mu,
            });
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                value: self.lambda,
            });
        }
        if !(self.kappa > 0.0) {
            return Err(Error::InvalidParameter {
                name: "kappa",
                value: self.kappa,
            });
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: self.dt,
            });
        }
        if let Some(alpha) = self.alpha {
            if !(alpha > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "alpha",
                    value: alpha,
                });
            }
        }
        if !(self.picard_tol > 0.0) {
            return Err(Error::InvalidParameter {
                name: "picard_tol",
                value: self.picard_tol,
            });
        }
        Ok(())
    }

    /// Cached `h^alpha` (zero when the term is disabled).
    pub fn h_pow_alpha(&self) -> f64 {
        match self.alpha {
            Some(a) => math::powf(self.flux.h, a),
            None => 0.0,
        }
    }
}

/// Per-step solver statistics.
#[derive(Debug, Clone, Copy)]
pub struct StepStats {
    /// Picard sweeps used.
    pub iterations: usize,
    /// Relative l2 increment of the last sweep.
    pub final_increment: f64,
    pub min_rho: f64,
    pub min_theta: f64,
    /// Heuristic warning: `dt > h / max |u|` degrades Picard convergence.
    pub dt_exceeds_advective_limit: bool,
}

/// Residuals of the three balance equations, one value per cell (momentum
/// per component).
#[derive(Debug, Clone)]
pub struct Residuals {
    pub continuity: ScalarField,
    pub momentum: VectorField,
    pub temperature: ScalarField,
}

/// Project smooth initial data onto the grid and validate positivity.
pub fn initial_state(
    grid: &Arc<Grid>,
    rho0: impl Fn(&[f64]) -> f64,
    u0: impl Fn(&[f64], usize) -> f64,
    theta0: impl Fn(&[f64]) -> f64,
) -> Result<State> {
    let rho = crate::fields::project_q(grid, rho0);
    let u = crate::fields::project_q_vector(grid, u0);
    let theta = crate::fields::project_q(grid, theta0);
    if rho.min() <= 0.0 {
        return Err(Error::NonPositiveInitialData {
            field: "rho",
            min: rho.min(),
        });
    }
    if theta.min() <= 0.0 {
        return Err(Error::NonPositiveInitialData {
            field: "theta",
            min: theta.min(),
        });
    }
    Ok(State {
        rho,
        u,
        theta,
        t: 0.0,
        grid: grid.clone(),
    })
}

/// Accumulate `coeff * |sigma| * F_eps(r, u)` with outward sign into `out`.
fn add_flux_divergence(
    grid: &Grid,
    r: &[f64],
    u: &VectorField,
    h_pow_eps: f64,
    coeff: f64,
    out: &mut [f64],
) {
    let area = grid.face_area();
    for axis in 0..grid.dim() {
        let plus = grid.plus_table(axis);
        let uax = &u.comps[axis].data;
        for k in 0..r.len() {
            let p = plus[k] as usize;
            let speed = 0.5 * (uax[k] + uax[p]);
            let f = coeff * area * diffusive_kernel(r[k], r[p], speed, h_pow_eps);
            out[k] += f;
            out[p] -= f;
        }
    }
}

/// Viscous stress `S = 2 mu D(u) + lambda div u I` from a velocity field.
fn stress_tensor(grid: &Grid, u: &VectorField, mu: f64, lambda: f64) -> TensorField {
    let d = grid.dim();
    let grad = operators::grad_vector(grid, u);
    let mut s = TensorField::zeros(grid);
    for k in 0..grid.n_cells() {
        let tr = grad.trace_at(k);
        for j in 0..d {
            for i in 0..d {
                let sym = grad.entry(j, i, k) + grad.entry(i, j, k);
                s.rows[j].comps[i].data[k] =
                    mu * sym + if i == j { lambda * tr } else { 0.0 };
            }
        }
    }
    s
}

/// Residuals of the three coupled algebraic equations with every spatial
/// term evaluated at `candidate` (fully implicit backward Euler).
pub fn assemble_residual(
    candidate: &State,
    previous: &State,
    params: &SchemeParams,
) -> Result<Residuals> {
    if !candidate.grid.same_layout(&previous.grid) {
        return Err(Error::GridMismatch);
    }
    let grid = &candidate.grid;
    let d = grid.dim();
    let nc = grid.n_cells();
    let vol = grid.cell_volume();
    let inv_dt = 1.0 / params.dt;
    let cv = params.gas.c_v;
    let heps = params.flux.h_pow_eps;

    // Continuity.
    let mut cont = ScalarField::zeros(grid);
    for k in 0..nc {
        cont.data[k] = vol * inv_dt * (candidate.rho.data[k] - previous.rho.data[k]);
    }
    add_flux_divergence(grid, &candidate.rho.data, &candidate.u, heps, 1.0, &mut cont.data);

    // Momentum.
    let p_field = ScalarField::from_fn(grid, |k| {
        pressure(candidate.rho.data[k], candidate.theta.data[k])
    });
    let grad_p = operators::grad_h(grid, &p_field);
    let s_tensor = stress_tensor(grid, &candidate.u, params.mu, params.lambda);
    let div_s = operators::div_tensor(grid, &s_tensor);
    let h_alpha = params.h_pow_alpha();
    let mut mom = VectorField::zeros(grid);
    let mut m_j = vec![0.0; nc];
    for j in 0..d {
        let out = &mut mom.comps[j].data;
        for k in 0..nc {
            let m_new = candidate.rho.data[k] * candidate.u.comps[j].data[k];
            let m_old = previous.rho.data[k] * previous.u.comps[j].data[k];
            out[k] = vol * inv_dt * (m_new - m_old)
                + vol * (grad_p.comps[j].data[k] - div_s.comps[j].data[k]);
            m_j[k] = m_new;
        }
        add_flux_divergence(grid, &m_j, &candidate.u, heps, 1.0, out);
        if params.alpha.is_some() {
            let lap = operators::laplace_h(grid, &candidate.u.comps[j]);
            for k in 0..nc {
                out[k] -= h_alpha * vol * lap.data[k];
            }
        }
    }

    // Temperature.
    let grad_u = operators::grad_vector(grid, &candidate.u);
    let lap_theta = operators::laplace_h(grid, &candidate.theta);
    let mut temp = ScalarField::zeros(grid);
    let mut q = vec![0.0; nc];
    for k in 0..nc {
        let q_new = candidate.rho.data[k] * candidate.theta.data[k];
        let q_old = previous.rho.data[k] * previous.theta.data[k];
        // (S - p I) : grad u, all at the candidate.
        let mut work = 0.0;
        for j in 0..d {
            for i in 0..d {
                let sij = s_tensor.entry(j, i, k) - if i == j { p_field.data[k] } else { 0.0 };
                work += sij * grad_u.entry(j, i, k);
            }
        }
        temp.data[k] =
            cv * vol * inv_dt * (q_new - q_old) - params.kappa * vol * lap_theta.data[k]
                - vol * work;
        q[k] = q_new;
    }
    add_flux_divergence(grid, &q, &candidate.u, heps, cv, &mut temp.data);

    Ok(Residuals {
        continuity: cont,
        momentum: mom,
        temperature: temp,
    })
}

/// Scratch space shared by the linear operators of one step.
struct StepWorkspace {
    grad: TensorField,
    stress: TensorField,
    div_s: VectorField,
    u_cand: VectorField,
    lap: ScalarField,
    ratio: ScalarField,
}

impl StepWorkspace {
    fn new(grid: &Grid) -> Self {
        Self {
            grad: TensorField::zeros(grid),
            stress: TensorField::zeros(grid),
            div_s: VectorField::zeros(grid),
            u_cand: VectorField::zeros(grid),
            lap: ScalarField::zeros(grid),
            ratio: ScalarField::zeros(grid),
        }
    }
}

/// Advance the state by one time step.
///
/// The returned state zeroes [`assemble_residual`] to the solver tolerance,
/// has strictly positive density and temperature, and carries
/// `t + dt`.
pub fn step(previous: &State, params: &SchemeParams) -> Result<(State, StepStats)> {
    params.validate()?;
    let grid = previous.grid.clone();
    let d = grid.dim();
    let nc = grid.n_cells();
    let vol = grid.cell_volume();
    let inv_dt = 1.0 / params.dt;
    let cv = params.gas.c_v;
    let heps = params.flux.h_pow_eps;
    let h_alpha = params.h_pow_alpha();
    let use_alpha = params.alpha.is_some();

    let max_speed = previous.max_speed();
    let dt_exceeds = max_speed > 0.0 && params.dt > grid.h() / max_speed;

    // Conservative products at the previous level.
    let m_prev: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            (0..nc)
                .map(|k| previous.rho.data[k] * previous.u.comps[j].data[k])
                .collect()
        })
        .collect();
    let q_prev: Vec<f64> = (0..nc)
        .map(|k| previous.rho.data[k] * previous.theta.data[k])
        .collect();

    let mut rho_cur = previous.rho.clone();
    let mut u_cur = previous.u.clone();
    let mut theta_cur = previous.theta.clone();
    let mut ws = StepWorkspace::new(&grid);

    let mut iterations = 0;
    let mut increment = f64::INFINITY;
    let mut converged = false;

    while iterations < params.picard_max {
        iterations += 1;

        // (i) Continuity: linear in rho with frozen velocity.
        let mut rho_new = rho_cur.data.clone();
        {
            let b: Vec<f64> = previous.rho.data.iter().map(|r| vol * inv_dt * r).collect();
            let u_frozen = &u_cur;
            bicgstab(
                |x, out| {
                    for (o, xi) in out.iter_mut().zip(x) {
                        *o = vol * inv_dt * xi;
                    }
                    add_flux_divergence(&grid, x, u_frozen, heps, 1.0, out);
                },
                &b,
                &mut rho_new,
                CONTINUITY_TOL,
                INNER_MAX_ITER,
            );
        }
        if !rho_new.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { step: 0 });
        }

        // (ii) Momentum: linear in m = rho u with updated density, frozen
        // convective velocity and pressure linearization.
        let p_star = ScalarField::from_fn(&grid, |k| pressure(rho_new[k], theta_cur.data[k]));
        let grad_p = operators::grad_h(&grid, &p_star);
        let mut m_stack = vec![0.0; d * nc];
        let mut b_stack = vec![0.0; d * nc];
        for j in 0..d {
            for k in 0..nc {
                m_stack[j * nc + k] = rho_new[k] * u_cur.comps[j].data[k];
                b_stack[j * nc + k] =
                    vol * inv_dt * m_prev[j][k] - vol * grad_p.comps[j].data[k];
            }
        }
        {
            let u_frozen = u_cur.clone();
            let rho_ref = &rho_new;
            let ws = &mut ws;
            let grid_ref = &grid;
            bicgstab(
                move |x, out| {
                    // u candidate from the momentum iterate.
                    for j in 0..d {
                        let uc = &mut ws.u_cand.comps[j].data;
                        let xs = &x[j * nc..(j + 1) * nc];
                        for k in 0..nc {
                            uc[k] = xs[k] / rho_ref[k];
                        }
                    }
                    operators::grad_vector_into(grid_ref, &ws.u_cand, &mut ws.grad);
                    for k in 0..nc {
                        let tr = ws.grad.trace_at(k);
                        for j in 0..d {
                            for i in 0..d {
                                let sym = ws.grad.entry(j, i, k) + ws.grad.entry(i, j, k);
                                ws.stress.rows[j].comps[i].data[k] = params.mu * sym
                                    + if i == j { params.lambda * tr } else { 0.0 };
                            }
                        }
                    }
                    operators::div_tensor_into(grid_ref, &ws.stress, &mut ws.div_s);
                    for j in 0..d {
                        let out_j = &mut out[j * nc..(j + 1) * nc];
                        let xs = &x[j * nc..(j + 1) * nc];
                        for k in 0..nc {
                            out_j[k] =
                                vol * inv_dt * xs[k] - vol * ws.div_s.comps[j].data[k];
                        }
                        add_flux_divergence(grid_ref, xs, &u_frozen, heps, 1.0, out_j);
                        if use_alpha {
                            operators::laplace_h_into(
                                grid_ref,
                                &ws.u_cand.comps[j],
                                &mut ws.lap,
                            );
                            for k in 0..nc {
                                out_j[k] -= h_alpha * vol * ws.lap.data[k];
                            }
                        }
                    }
                },
                &b_stack,
                &mut m_stack,
                MOMENTUM_TOL,
                INNER_MAX_ITER,
            );
        }
        if !m_stack.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { step: 0 });
        }
        let mut u_new = VectorField::zeros(&grid);
        for j in 0..d {
            for k in 0..nc {
                u_new.comps[j].data[k] = m_stack[j * nc + k] / rho_new[k];
            }
        }

        // (iii) Temperature: linear in q = rho theta with the new velocity;
        // the pressure work `p div u` keeps p = q implicit, the viscous
        // heating is a known source.
        operators::grad_vector_into(&grid, &u_new, &mut ws.grad);
        let mut div_u = vec![0.0; nc];
        let mut s_work = vec![0.0; nc];
        for k in 0..nc {
            div_u[k] = ws.grad.trace_at(k);
            let mut w = 0.0;
            for j in 0..d {
                for i in 0..d {
                    let sym = ws.grad.entry(j, i, k) + ws.grad.entry(i, j, k);
                    let sij =
                        params.mu * sym + if i == j { params.lambda * div_u[k] } else { 0.0 };
                    w += sij * ws.grad.entry(j, i, k);
                }
            }
            s_work[k] = w;
        }
        let mut q_new: Vec<f64> = (0..nc).map(|k| rho_new[k] * theta_cur.data[k]).collect();
        {
            let b: Vec<f64> = (0..nc)
                .map(|k| cv * vol * inv_dt * q_prev[k] + vol * s_work[k])
                .collect();
            let rho_ref = &rho_new;
            let ws = &mut ws;
            let grid_ref = &grid;
            let div_u = &div_u;
            let u_new_ref = &u_new;
            bicgstab(
                move |x, out| {
                    for k in 0..nc {
                        ws.ratio.data[k] = x[k] / rho_ref[k];
                    }
                    operators::laplace_h_into(grid_ref, &ws.ratio, &mut ws.lap);
                    for k in 0..nc {
                        out[k] = cv * vol * inv_dt * x[k] - params.kappa * vol * ws.lap.data[k]
                            + vol * div_u[k] * x[k];
                    }
                    add_flux_divergence(grid_ref, x, u_new_ref, heps, cv, out);
                },
                &b,
                &mut q_new,
                TEMPERATURE_TOL,
                INNER_MAX_ITER,
            );
        }
        if !q_new.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { step: 0 });
        }

        // Relative l2 increment of (rho, u, theta).
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..nc {
            let dr = rho_new[k] - rho_cur.data[k];
            num += dr * dr;
            den += rho_new[k] * rho_new[k];
            let theta_new = q_new[k] / rho_new[k];
            let dtheta = theta_new - theta_cur.data[k];
            num += dtheta * dtheta;
            den += theta_new * theta_new;
            for j in 0..d {
                let du = u_new.comps[j].data[k] - u_cur.comps[j].data[k];
                num += du * du;
                den += u_new.comps[j].data[k] * u_new.comps[j].data[k];
            }
        }
        increment = math::sqrt(num / den.max(f64::MIN_POSITIVE));

        rho_cur.data.copy_from_slice(&rho_new);
        u_cur = u_new;
        for k in 0..nc {
            theta_cur.data[k] = q_new[k] / rho_new[k];
        }

        if increment <= params.picard_tol {
            converged = true;
            break;
        }
    }

    if !converged {
        return Err(Error::NoConvergence {
            step: 0,
            iterations,
            increment,
        });
    }

    let min_rho = rho_cur.min();
    let min_theta = theta_cur.min();
    if min_rho <= 0.0 || min_theta <= 0.0 {
        return Err(Error::PositivityLoss {
            step: 0,
            min_rho,
            min_theta,
        });
    }

    Ok((
        State {
            rho: rho_cur,
            u: u_cur,
            theta: theta_cur,
            t: previous.t + params.dt,
            grid,
        },
        StepStats {
            iterations,
            final_increment: increment,
            min_rho,
            min_theta,
            dt_exceeds_advective_limit: dt_exceeds,
        },
    ))
}

/// Full record of a run: states at the recorded stamps (always including
/// the initial and final one) and a diagnostics record for every step.
#[derive(Debug, Clone)]
pub struct RunHistory {
    pub dt: f64,
    /// Times of the recorded states.
    pub times: Vec<f64>,
    /// Step indices of the recorded states.
    pub stamp_steps: Vec<usize>,
    pub states: Vec<State>,
    /// One record per time step, step indices `1..=n_steps`.
    pub records: Vec<DiagnosticsRecord>,
}

impl RunHistory {
    pub fn final_state(&self) -> &State {
        self.states.last().expect("history holds the initial state")
    }

    /// Whether every step was recorded (required by the consistency
    /// defects, which integrate over the full piecewise constant solution).
    pub fn is_dense(&self) -> bool {
        self.stamp_steps.iter().copied().eq(0..self.states.len())
            && self.states.len() == self.records.len() + 1
    }
}

/// Number of steps for `t_end`, rejecting non-integer multiples of `dt`.
pub fn step_count(t_end: f64, dt: f64) -> Result<usize> {
    if t_end < 0.0 || !t_end.is_finite() {
        return Err(Error::InvalidParameter {
            name: "t_end",
            value: t_end,
        });
    }
    let ratio = t_end / dt;
    let rounded = if ratio - ratio as u64 as f64 >= 0.5 {
        ratio as u64 + 1
    } else {
        ratio as u64
    };
    if (ratio - rounded as f64).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::NonIntegerStepCount { t_end, dt });
    }
    Ok(rounded as usize)
}

/// Run the scheme for `t_end = N_T dt`, storing states every
/// `record_every` steps and diagnostics every step.
pub fn run(
    initial: State,
    params: &SchemeParams,
    t_end: f64,
    record_every: usize,
) -> Result<RunHistory> {
    run_with_observer(initial, params, t_end, record_every, |_, _, _| {})
}

/// [`run`] with a per-step observer `(step index, state, record)`.
pub fn run_with_observer(
    initial: State,
    params: &SchemeParams,
    t_end: f64,
    record_every: usize,
    mut observer: impl FnMut(usize, &State, &DiagnosticsRecord),
) -> Result<RunHistory> {
    params.validate()?;
    let n_steps = step_count(t_end, params.dt)?;
    let every = record_every.max(1);
    let mut history = RunHistory {
        dt: params.dt,
        times: vec![initial.t],
        stamp_steps: vec![0],
        states: vec![initial],
        records: Vec::with_capacity(n_steps),
    };
    let mut current = history.states[0].clone();
    for k in 1..=n_steps {
        let (next, stats) = step(&current, params).map_err(|e| e.at_step(k))?;
        let record = diagnostics::record(&current, &next, params, &stats, k);
        observer(k, &next, &record);
        history.records.push(record);
        if k % every == 0 || k == n_steps {
            history.times.push(next.t);
            history.stamp_steps.push(k);
            history.states.push(next.clone());
        }
        current = next;
    }
    Ok(history)
}
