//! Error norms against a reference trajectory, EOC tables and the
//! self-convergence study driver.
//!
//! No closed-form strong solutions of the full system are available, so the
//! study compares each level against a strictly finer reference run,
//! restricted by exact cell averaging at shared time stamps. This surrogate
//! certifies the rate trend, not the constants of the error estimate; the
//! realized density/temperature windows are reported with every table so
//! the uniform-boundedness hypothesis can be audited.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fields::{ScalarField, VectorField};
use crate::math;
use crate::mesh::Grid;
use crate::operators;
use crate::scheme::{self, RunHistory, SchemeParams, State};
use crate::thermo::{relative_energy, GasParams};

/// Exact cell-average restriction of a fine field onto a coarser grid
/// whose resolution divides the fine one (this is the projection of the
/// fine piecewise constant field).
pub fn restrict(fine: &ScalarField, fine_grid: &Grid, coarse_grid: &Grid) -> Result<ScalarField> {
    if fine_grid.dim() != coarse_grid.dim() {
        return Err(Error::GridMismatch);
    }
    let nf = fine_grid.cells_per_axis();
    let nc = coarse_grid.cells_per_axis();
    if nf % nc != 0 {
        return Err(Error::NonIntegerRefinement {
            fine: nf,
            coarse: nc,
        });
    }
    let m = nf / nc;
    let d = fine_grid.dim();
    let mut out = ScalarField::zeros(coarse_grid);
    for k in 0..fine_grid.n_cells() {
        let fc = fine_grid.cell_coords(k);
        let mut cc = [0usize; 3];
        for a in 0..d {
            cc[a] = fc[a] / m;
        }
        out.data[coarse_grid.cell_index(&cc[..d])] += fine.data[k];
    }
    let children = m.pow(d as u32) as f64;
    out.scale(1.0 / children);
    Ok(out)
}

/// Restrict a full state (density, velocity, temperature) onto a coarser
/// grid, keeping the time stamp.
pub fn restrict_state(fine: &State, coarse_grid: &Arc<Grid>) -> Result<State> {
    let rho = restrict(&fine.rho, &fine.grid, coarse_grid)?;
    let comps = fine
        .u
        .comps
        .iter()
        .map(|c| restrict(c, &fine.grid, coarse_grid))
        .collect::<Result<Vec<_>>>()?;
    let theta = restrict(&fine.theta, &fine.grid, coarse_grid)?;
    Ok(State {
        rho,
        u: VectorField { comps },
        theta,
        t: fine.t,
        grid: coarse_grid.clone(),
    })
}

/// Error norms of a trajectory against a reference on the same grid and
/// time stamps.
#[derive(Debug, Clone, Copy)]
pub struct ErrorReport {
    /// `L^inf(0,T; L^2)` errors: maxima over recorded times of spatial
    /// `L^2` norms.
    pub rho_linf_l2: f64,
    pub u_linf_l2: f64,
    pub theta_linf_l2: f64,
    /// `L^2(0,T; L^2)` error of the cell gradient of the velocity.
    pub grad_u_l2l2: f64,
    /// `L^2(0,T; L^2)` error of the dual-grid temperature gradient.
    pub grad_theta_l2l2: f64,
    /// Supremum over recorded times of the relative energy.
    pub rel_energy_sup: f64,
    pub h: f64,
    pub dt: f64,
    pub eps: f64,
    pub alpha: Option<f64>,
}

/// Compare recorded states with reference states stamp by stamp.
///
/// Spatial norms are `h^(d/2)`-weighted Euclidean norms; time integrals of
/// the gradient errors use step-weighted sums over the stamps (weight
/// `stamp_dt`, skipping the shared initial stamp). Gradient errors compare
/// the discrete gradients of both trajectories.
pub fn error_norms(
    states: &[State],
    reference: &[State],
    stamp_dt: f64,
    params: &SchemeParams,
) -> Result<ErrorReport> {
    if states.len() != reference.len() || states.is_empty() {
        return Err(Error::StampMismatch);
    }
    let grid = &states[0].grid;
    let d = grid.dim();
    let mut rho_sup = 0.0f64;
    let mut u_sup = 0.0f64;
    let mut theta_sup = 0.0f64;
    let mut grad_u_sq = 0.0;
    let mut grad_theta_sq = 0.0;
    let mut re_sup = 0.0f64;
    for (idx, (s, r)) in states.iter().zip(reference).enumerate() {
        if !s.grid.same_layout(grid) || !r.grid.same_layout(grid) {
            return Err(Error::GridMismatch);
        }
        if math::abs(s.t - r.t) > 1e-9 * (1.0 + math::abs(s.t)) {
            return Err(Error::StampMismatch);
        }
        let diff_rho = ScalarField::from_fn(grid, |k| s.rho.data[k] - r.rho.data[k]);
        let diff_theta = ScalarField::from_fn(grid, |k| s.theta.data[k] - r.theta.data[k]);
        let diff_u = VectorField {
            comps: (0..d)
                .map(|j| {
                    ScalarField::from_fn(grid, |k| s.u.comps[j].data[k] - r.u.comps[j].data[k])
                })
                .collect(),
        };
        rho_sup = rho_sup.max(diff_rho.l2_norm(grid));
        theta_sup = theta_sup.max(diff_theta.l2_norm(grid));
        u_sup = u_sup.max(diff_u.l2_norm(grid));
        re_sup = re_sup.max(relative_energy(s, r, &params.gas)?);
        if idx > 0 {
            let gu = operators::grad_vector(grid, &diff_u);
            let n = gu.l2_norm(grid);
            grad_u_sq += stamp_dt * n * n;
            let gt = operators::grad_e(grid, &diff_theta);
            let n = gt.l2_norm(grid);
            grad_theta_sq += stamp_dt * n * n;
        }
    }
    Ok(ErrorReport {
        rho_linf_l2: rho_sup,
        u_linf_l2: u_sup,
        theta_linf_l2: theta_sup,
        grad_u_l2l2: math::sqrt(grad_u_sq),
        grad_theta_l2l2: math::sqrt(grad_theta_sq),
        rel_energy_sup: re_sup,
        h: grid.h(),
        dt: params.dt,
        eps: params.flux.eps,
        alpha: params.alpha,
    })
}

/// Pairwise experimental orders of convergence
/// `rate_k = log(e_k / e_{k+1}) / log(h_k / h_{k+1})`.
///
/// Zero or negative errors yield `None` markers rather than a crash.
pub fn eoc(errors: &[(f64, f64)]) -> Vec<Option<f64>> {
    errors
        .windows(2)
        .map(|w| {
            let (h0, e0) = w[0];
            let (h1, e1) = w[1];
            if e0 > 0.0 && e1 > 0.0 && h0 > h1 && h1 > 0.0 {
                Some(math::log2(e0 / e1) / math::log2(h0 / h1))
            } else {
                None
            }
        })
        .collect()
}

/// Least-squares slope of `log e` against `log h` over a refinement chain.
pub fn eoc_regression(errors: &[(f64, f64)]) -> Option<f64> {
    if errors.len() < 2 || errors.iter().any(|&(h, e)| h <= 0.0 || e <= 0.0) {
        return None;
    }
    let n = errors.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(h, e) in errors {
        let x = math::ln(h);
        let y = math::ln(e);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        None
    } else {
        Some((n * sxy - sx * sy) / denom)
    }
}

/// Physical/numerical parameters shared by every level of a study.
#[derive(Debug, Clone)]
pub struct PhysicsConfig {
    pub gas: GasParams,
    pub mu: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub eps: f64,
    pub alpha: Option<f64>,
    pub picard_tol: f64,
    pub picard_max: usize,
}

impl PhysicsConfig {
    /// Scheme parameters for mesh width `h` with the time step `dt`.
    pub fn scheme_params(&self, dt: f64, h: f64) -> Result<SchemeParams> {
        let mut p = SchemeParams::new(self.gas, self.mu, self.lambda, self.kappa, self.eps, dt, h)?;
        p.picard_tol = self.picard_tol;
        p.picard_max = self.picard_max;
        if let Some(a) = self.alpha {
            p = p.with_alpha(a)?;
        }
        Ok(p)
    }
}

/// Coupling of the time step to the mesh width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtRule {
    /// `dt = coeff * h`, the study default.
    LinearInH { coeff: f64 },
    /// `dt = coeff * h^2`, used to isolate the spatial consistency order.
    QuadraticInH { coeff: f64 },
}

impl DtRule {
    pub fn dt(&self, h: f64) -> f64 {
        match *self {
            DtRule::LinearInH { coeff } => coeff * h,
            DtRule::QuadraticInH { coeff } => coeff * h * h,
        }
    }
}

/// Configuration of a self-convergence study.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub d: usize,
    /// Doubling chain of cell counts, coarse to fine.
    pub levels: Vec<usize>,
    /// Reference resolution, strictly finer than every level.
    pub reference_n: usize,
    pub t_end: f64,
    pub dt_rule: DtRule,
}

impl StudyConfig {
    fn validate(&self) -> Result<()> {
        if self.levels.len() < 2 {
            return Err(Error::InvalidStudy("need at least two levels"));
        }
        for pair in self.levels.windows(2) {
            if pair[1] != 2 * pair[0] {
                return Err(Error::InvalidStudy("levels must double"));
            }
        }
        let finest = *self.levels.last().unwrap();
        if self.reference_n <= finest {
            return Err(Error::InvalidStudy("reference must be finer than all levels"));
        }
        for &n in &self.levels {
            if self.reference_n % n != 0 {
                return Err(Error::InvalidStudy(
                    "reference must be an integer refinement of every level",
                ));
            }
        }
        if !(self.t_end > 0.0) {
            return Err(Error::InvalidStudy("t_end must be positive"));
        }
        Ok(())
    }

    /// Time stamp spacing shared by every level: the coarsest time step.
    pub fn stamp_dt(&self) -> f64 {
        self.dt_rule.dt(1.0 / self.levels[0] as f64)
    }

    /// Record interval of a run at resolution `n`.
    pub fn record_every(&self, n: usize) -> Result<usize> {
        let dt = self.dt_rule.dt(1.0 / n as f64);
        let ratio = self.stamp_dt() / dt;
        let rounded = libround(ratio);
        if (ratio - rounded as f64).abs() > 1e-9 {
            return Err(Error::InvalidStudy("time steps do not nest across levels"));
        }
        Ok(rounded)
    }
}

fn libround(x: f64) -> usize {
    (x + 0.5) as usize
}

/// One assembled level of a study table.
#[derive(Debug, Clone)]
pub struct StudyRow {
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    pub report: ErrorReport,
    /// Realized density/temperature window over the whole run (the
    /// monitored uniform-boundedness assumption).
    pub as_rho_min: f64,
    pub as_rho_max: f64,
    pub as_theta_min: f64,
    pub as_theta_max: f64,
    /// Time-integrated artificial-viscosity dissipation from the energy
    /// balance records.
    pub alpha_dissipation: f64,
    /// Stamp-integrated `|grad_E u_h|^2` of the numerical solution itself.
    pub grad_e_u_sq: f64,
}

/// Study table: rows ordered coarse to fine plus pairwise EOC columns.
#[derive(Debug, Clone)]
pub struct StudyTable {
    pub rows: Vec<StudyRow>,
    /// `rates_*[i]` is the EOC from row `i-1` to row `i`; `None` on the
    /// first row or for degenerate errors.
    pub rates_rho: Vec<Option<f64>>,
    pub rates_u: Vec<Option<f64>>,
    pub rates_theta: Vec<Option<f64>>,
}

impl StudyTable {
    fn assemble(rows: Vec<StudyRow>) -> Self {
        let pick = |f: fn(&ErrorReport) -> f64| -> Vec<Option<f64>> {
            let series: Vec<(f64, f64)> = rows.iter().map(|r| (r.h, f(&r.report))).collect();
            let mut rates = vec![None];
            rates.extend(eoc(&series));
            rates
        };
        let rates_rho = pick(|r| r.rho_linf_l2);
        let rates_u = pick(|r| r.u_linf_l2);
        let rates_theta = pick(|r| r.theta_linf_l2);
        Self {
            rows,
            rates_rho,
            rates_u,
            rates_theta,
        }
    }
}

/// Initial-data samplers shared by all levels of a study.
pub struct InitialData<'a> {
    pub rho: &'a (dyn Fn(&[f64]) -> f64 + Sync),
    pub u: &'a (dyn Fn(&[f64], usize) -> f64 + Sync),
    pub theta: &'a (dyn Fn(&[f64]) -> f64 + Sync),
}

/// Run one resolution of a study and return its dense-in-stamps history.
pub fn execute_level(
    cfg: &StudyConfig,
    phys: &PhysicsConfig,
    ic: &InitialData<'_>,
    n: usize,
) -> Result<RunHistory> {
    let grid = Arc::new(Grid::new(cfg.d, n)?);
    let dt = cfg.dt_rule.dt(grid.h());
    let params = phys.scheme_params(dt, grid.h())?;
    let record_every = cfg.record_every(n)?;
    let initial = scheme::initial_state(&grid, ic.rho, |x, j| (ic.u)(x, j), ic.theta)?;
    scheme::run(initial, &params, cfg.t_end, record_every).map_err(|e| Error::LevelFailed {
        n,
        source: Box::new(e),
    })
}

/// Assemble the study table from precomputed level histories.
///
/// `histories` must follow `cfg.levels` order; `reference` is the fine run.
pub fn assemble_study(
    cfg: &StudyConfig,
    phys: &PhysicsConfig,
    histories: &[RunHistory],
    reference: &RunHistory,
) -> Result<StudyTable> {
    cfg.validate()?;
    if histories.len() != cfg.levels.len() {
        return Err(Error::InvalidStudy("one history per level required"));
    }
    let stamp_dt = cfg.stamp_dt();
    let mut rows = Vec::with_capacity(histories.len());
    for (&n, history) in cfg.levels.iter().zip(histories) {
        let grid = history.states[0].grid.clone();
        if reference.states.len() != history.states.len() {
            return Err(Error::StampMismatch);
        }
        let restricted: Vec<State> = reference
            .states
            .iter()
            .map(|s| restrict_state(s, &grid))
            .collect::<Result<Vec<_>>>()?;
        let dt = cfg.dt_rule.dt(grid.h());
        let params = phys.scheme_params(dt, grid.h())?;
        let report = error_norms(&history.states, &restricted, stamp_dt, &params)?;

        let mut as_rho_min = f64::INFINITY;
        let mut as_rho_max = f64::NEG_INFINITY;
        let mut as_theta_min = f64::INFINITY;
        let mut as_theta_max = f64::NEG_INFINITY;
        let mut alpha_diss = 0.0;
        for r in &history.records {
            as_rho_min = as_rho_min.min(r.rho_min);
            as_rho_max = as_rho_max.max(r.rho_max);
            as_theta_min = as_theta_min.min(r.theta_min);
            as_theta_max = as_theta_max.max(r.theta_max);
            alpha_diss += dt * r.diss_alpha;
        }
        // Include the initial stamp in the realized window.
        let s0 = &history.states[0];
        as_rho_min = as_rho_min.min(s0.rho.min());
        as_rho_max = as_rho_max.max(s0.rho.max());
        as_theta_min = as_theta_min.min(s0.theta.min());
        as_theta_max = as_theta_max.max(s0.theta.max());

        let mut grad_sq = 0.0;
        for (idx, s) in history.states.iter().enumerate() {
            if idx == 0 {
                continue;
            }
            let mut sq = 0.0;
            for j in 0..grid.dim() {
                let ge = operators::grad_e(&grid, &s.u.comps[j]);
                let nrm = ge.l2_norm(&grid);
                sq += nrm * nrm;
            }
            grad_sq += stamp_dt * sq;
        }

        rows.push(StudyRow {
            n,
            h: grid.h(),
            dt,
            report,
            as_rho_min,
            as_rho_max,
            as_theta_min,
            as_theta_max,
            alpha_dissipation: alpha_diss,
            grad_e_u_sq: grad_sq,
        });
    }
    Ok(StudyTable::assemble(rows))
}

/// Run a full self-convergence study sequentially: every level, the
/// reference, then the table.
pub fn run_study(
    cfg: &StudyConfig,
    phys: &PhysicsConfig,
    ic: &InitialData<'_>,
) -> Result<StudyTable> {
    cfg.validate()?;
    let reference = execute_level(cfg, phys, ic, cfg.reference_n)?;
    let mut histories = Vec::with_capacity(cfg.levels.len());
    for &n in &cfg.levels {
        histories.push(execute_level(cfg, phys, ic, n)?);
    }
    assemble_study(cfg, phys, &histories, &reference)
}
