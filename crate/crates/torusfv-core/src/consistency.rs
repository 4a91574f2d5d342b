//! Weak-form consistency defects of a computed run.
//!
//! The numerical solution, piecewise constant in space and time, is tested
//! against smooth space-time functions in the weak formulations of the
//! mass, momentum and entropy balances; the defects `e_rho`, `e_m`, `e_s`
//! decay with the discretization parameters at known rates.
//!
//! Test functions are separable, `phi(t, x) = T(t) X(x)`: the spatial
//! integrals of `X` and its gradient over cells (and half dual cells for
//! the entropy terms) are precomputed once per grid, and the time
//! integration of the remaining smooth factor uses Gauss quadrature per
//! step, so the exact piecewise-constant-in-time structure of the solution
//! is preserved and the only quadrature error lives in space, over the test
//! function.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fields::box_mean;
use crate::math;
use crate::mesh::Grid;
use crate::scheme::{RunHistory, SchemeParams, State};
use crate::thermo::{entropy, pressure};

type TimeFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;
type SpaceFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type SpaceGradFn = Box<dyn Fn(&[f64], usize) -> f64 + Send + Sync>;
type SpaceHessFn = Box<dyn Fn(&[f64], usize, usize) -> f64 + Send + Sync>;

/// Separable space-time test function with samplers for the time
/// derivative, the spatial gradient and the spatial Hessian.
pub struct TestFunction {
    pub name: String,
    pub time_value: TimeFn,
    pub time_deriv: TimeFn,
    pub space_value: SpaceFn,
    pub space_grad: SpaceGradFn,
    pub space_hess: SpaceHessFn,
}

impl TestFunction {
    pub fn value(&self, t: f64, x: &[f64]) -> f64 {
        (self.time_value)(t) * (self.space_value)(x)
    }

    pub fn dt(&self, t: f64, x: &[f64]) -> f64 {
        (self.time_deriv)(t) * (self.space_value)(x)
    }

    pub fn grad(&self, t: f64, x: &[f64], i: usize) -> f64 {
        (self.time_value)(t) * (self.space_grad)(x, i)
    }

    pub fn hess(&self, t: f64, x: &[f64], i: usize, j: usize) -> f64 {
        (self.time_value)(t) * (self.space_hess)(x, i, j)
    }

    /// `phi = 1`: flux and gradient terms vanish, the mass defect reduces
    /// to the conservation defect.
    pub fn one() -> Self {
        Self {
            name: String::from("one"),
            time_value: Box::new(|_| 1.0),
            time_deriv: Box::new(|_| 0.0),
            space_value: Box::new(|_| 1.0),
            space_grad: Box::new(|_, _| 0.0),
            space_hess: Box::new(|_, _, _| 0.0),
        }
    }
}

/// One factor of a per-axis trigonometric product.
#[derive(Debug, Clone, Copy)]
pub enum Wave {
    One,
    /// `sin(2 pi k x)`.
    Sin(u32),
    /// `cos(2 pi k x)`.
    Cos(u32),
}

impl Wave {
    fn value(self, x: f64) -> f64 {
        match self {
            Wave::One => 1.0,
            Wave::Sin(k) => math::sin(2.0 * core::f64::consts::PI * k as f64 * x),
            Wave::Cos(k) => math::cos(2.0 * core::f64::consts::PI * k as f64 * x),
        }
    }

    fn deriv(self, x: f64) -> f64 {
        match self {
            Wave::One => 0.0,
            Wave::Sin(k) => {
                let w = 2.0 * core::f64::consts::PI * k as f64;
                w * math::cos(w * x)
            }
            Wave::Cos(k) => {
                let w = 2.0 * core::f64::consts::PI * k as f64;
                -w * math::sin(w * x)
            }
        }
    }

    fn second(self, x: f64) -> f64 {
        match self {
            Wave::One => 0.0,
            Wave::Sin(k) | Wave::Cos(k) => {
                let w = 2.0 * core::f64::consts::PI * k as f64;
                -w * w * self.value(x)
            }
        }
    }
}

/// `phi(t, x) = (c0 + c1 t + c2 t^2) (offset + amp * prod_i wave_i(x_i))`.
pub fn product_test_fn(
    name: &str,
    time: [f64; 3],
    offset: f64,
    amp: f64,
    waves: Vec<Wave>,
) -> TestFunction {
    let waves_v = waves.clone();
    let waves_g = waves.clone();
    let waves_h = waves;
    TestFunction {
        name: String::from(name),
        time_value: Box::new(move |t| time[0] + time[1] * t + time[2] * t * t),
        time_deriv: Box::new(move |t| time[1] + 2.0 * time[2] * t),
        space_value: Box::new(move |x| {
            let mut p = 1.0;
            for (axis, w) in waves_v.iter().enumerate() {
                p *= w.value(x[axis]);
            }
            offset + amp * p
        }),
        space_grad: Box::new(move |x, i| {
            let mut p = 1.0;
            for (axis, w) in waves_g.iter().enumerate() {
                p *= if axis == i {
                    w.deriv(x[axis])
                } else {
                    w.value(x[axis])
                };
            }
            amp * p
        }),
        space_hess: Box::new(move |x, i, j| {
            let mut p = 1.0;
            for (axis, w) in waves_h.iter().enumerate() {
                p *= if axis == i && axis == j {
                    w.second(x[axis])
                } else if axis == i || axis == j {
                    w.deriv(x[axis])
                } else {
                    w.value(x[axis])
                };
            }
            amp * p
        }),
    }
}

/// The canonical smooth scalar test function of the built-in set.
///
/// A single low mode along the first axis: it correlates with the density
/// modes of the built-in initial data, so the leading `h^eps` penalty
/// component of the mass defect stays sign-definite instead of integrating
/// to zero by accident.
pub fn canonical_scalar(d: usize) -> TestFunction {
    let mut waves = vec![Wave::Sin(1), Wave::One];
    if d == 3 {
        waves.push(Wave::One);
    }
    product_test_fn("scalar-sin1", [1.0, 0.5, -0.25], 0.75, 0.5, waves)
}

/// A mixed two-mode scalar test function (wavenumbers up to 2).
pub fn mixed_scalar(d: usize) -> TestFunction {
    let mut waves = vec![Wave::Sin(1), Wave::Cos(2)];
    if d == 3 {
        waves.push(Wave::Cos(1));
    }
    product_test_fn("scalar-sin1cos2", [1.0, 0.5, -0.25], 0.75, 0.5, waves)
}

/// Component test functions for the momentum defect.
pub fn canonical_vector(d: usize) -> Vec<TestFunction> {
    (0..d)
        .map(|j| {
            let mut waves = vec![Wave::One; d];
            waves[j % d] = Wave::Cos(1);
            waves[(j + 1) % d] = Wave::Sin(2);
            let mut name = String::from("vector-comp-");
            name.push((b'0' + j as u8) as char);
            product_test_fn(&name, [1.0, 0.4, -0.2], 0.6, 0.4, waves)
        })
        .collect()
}

/// A strictly positive test function for the entropy inequality.
pub fn canonical_entropy(d: usize) -> TestFunction {
    let mut waves = vec![Wave::Cos(1), Wave::Cos(1)];
    if d == 3 {
        waves.push(Wave::One);
    }
    product_test_fn("entropy-positive", [1.0, 0.25, 0.0], 1.0, 0.45, waves)
}

/// Per-test-function defects of one run.
#[derive(Debug, Clone)]
pub struct ConsistencyReport {
    /// Mass defect for the scalar test function.
    pub e_rho: f64,
    /// Momentum defect per component.
    pub e_m: Vec<f64>,
    /// Euclidean norm of `e_m`.
    pub e_m_norm: f64,
    /// Signed entropy defect; nonnegative means the inequality direction
    /// holds.
    pub e_s_signed: f64,
    pub h: f64,
    pub dt: f64,
    pub eps: f64,
}

/// Exact cell integrals of the spatial factor and its gradient.
struct SpaceIntegrals {
    /// `int_K X` per cell.
    ix: Vec<f64>,
    /// `int_K dX/dx_i` per axis, per cell.
    igx: Vec<Vec<f64>>,
}

impl SpaceIntegrals {
    fn compute(grid: &Grid, tf: &TestFunction) -> Self {
        let d = grid.dim();
        let vol = grid.cell_volume();
        let nc = grid.n_cells();
        let mut ix = vec![0.0; nc];
        let mut igx = vec![vec![0.0; nc]; d];
        let mut x = [0.0f64; 3];
        for k in 0..nc {
            let low = grid.cell_low_corner(k);
            ix[k] = vol * crate::fields::tensor_mean(d, &mut x, &low, grid.h(), |p| {
                (tf.space_value)(p)
            });
            for (i, gi) in igx.iter_mut().enumerate() {
                gi[k] = vol
                    * crate::fields::tensor_mean(d, &mut x, &low, grid.h(), |p| {
                        (tf.space_grad)(p, i)
                    });
            }
        }
        Self { ix, igx }
    }
}

/// Integrals of `X` and its normal derivative over the two half dual cells
/// of every face, needed by the entropy defect.
struct HalfCellIntegrals {
    /// `[int_{D_sigma,in} X, int_{D_sigma,out} X]` per face.
    ix: Vec<[f64; 2]>,
    /// Same for the derivative along the face axis.
    igx: Vec<[f64; 2]>,
}

impl HalfCellIntegrals {
    fn compute(grid: &Grid, tf: &TestFunction) -> Self {
        let d = grid.dim();
        let half_vol = 0.5 * grid.cell_volume();
        let h = grid.h();
        let mut ix = Vec::with_capacity(grid.n_faces());
        let mut igx = Vec::with_capacity(grid.n_faces());
        let mut x = [0.0f64; 3];
        for face in grid.faces() {
            let axis = face.axis;
            let mut ext = [h; 3];
            ext[axis] = 0.5 * h;
            // The in-half spans the upper half of the in cell along the
            // axis, the out-half the lower half of the out cell.
            let mut low_in = grid.cell_low_corner(face.in_cell);
            low_in[axis] += 0.5 * h;
            let low_out = grid.cell_low_corner(face.out_cell);
            let vi = half_vol * box_mean(d, &mut x, &low_in, &ext, |p| (tf.space_value)(p));
            let vo = half_vol * box_mean(d, &mut x, &low_out, &ext, |p| (tf.space_value)(p));
            let gi = half_vol * box_mean(d, &mut x, &low_in, &ext, |p| (tf.space_grad)(p, axis));
            let go = half_vol * box_mean(d, &mut x, &low_out, &ext, |p| (tf.space_grad)(p, axis));
            ix.push([vi, vo]);
            igx.push([gi, go]);
        }
        Self { ix, igx }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// 3-point Gauss nodes/weights on `[0, 1]`; exact for the polynomial time
/// factors in use and far below the defect floor for generic smooth ones.
const TIME_NODES: [f64; 3] = [0.112_701_665_379_258_3, 0.5, 0.887_298_334_620_741_7];
const TIME_WEIGHTS: [f64; 3] = [
    0.277_777_777_777_777_8,
    0.444_444_444_444_444_4,
    0.277_777_777_777_777_8,
];

/// `int_a^b T(t) dt` with 3-point Gauss.
fn time_integral(tf: &TestFunction, a: f64, b: f64) -> f64 {
    let len = b - a;
    TIME_NODES
        .iter()
        .zip(TIME_WEIGHTS)
        .map(|(n, w)| w * (tf.time_value)(a + n * len))
        .sum::<f64>()
        * len
}

fn checked_stamp(history: &RunHistory, tau: f64) -> Result<usize> {
    if !history.is_dense() {
        return Err(Error::InvalidTestFunction(
            "consistency defects need a history recorded at every step",
        ));
    }
    let n = crate::scheme::step_count(tau, history.dt)?;
    if n >= history.states.len() {
        return Err(Error::InvalidParameter {
            name: "tau",
            value: tau,
        });
    }
    Ok(n)
}

/// Mass defect `e_rho(phi, dt, h, tau)`:
///
/// `[int rho phi]_0^tau - int_0^tau int (rho dphi/dt + rho u . grad phi)`.
pub fn mass_defect(history: &RunHistory, phi: &TestFunction, tau: f64) -> Result<f64> {
    let n = checked_stamp(history, tau)?;
    let grid = &history.states[0].grid;
    let ints = SpaceIntegrals::compute(grid, phi);
    let d = grid.dim();

    let s_end = &history.states[n];
    let s_0 = &history.states[0];
    let lhs = (phi.time_value)(s_end.t) * dot(&s_end.rho.data, &ints.ix)
        - (phi.time_value)(s_0.t) * dot(&s_0.rho.data, &ints.ix);

    let mut rhs = 0.0;
    let mut flux_coef = vec![0.0; grid.n_cells()];
    for k in 0..n {
        let state = &history.states[k];
        let (t0, t1) = (history.states[k].t, history.states[k + 1].t);
        // d/dt part integrates exactly: rho^k (T(t1) - T(t0)) <X>.
        rhs += dot(&state.rho.data, &ints.ix) * ((phi.time_value)(t1) - (phi.time_value)(t0));
        // Convection: rho u . grad phi with the state frozen on [t0, t1).
        let mut conv = 0.0;
        for i in 0..d {
            for (c, (r, u)) in flux_coef
                .iter_mut()
                .zip(state.rho.data.iter().zip(&state.u.comps[i].data))
            {
                *c = r * u;
            }
            conv += dot(&flux_coef, &ints.igx[i]);
        }
        rhs += conv * time_integral(phi, t0, t1);
    }
    Ok(lhs - rhs)
}

/// Momentum defect `e_m` per component, one test function per component.
pub fn momentum_defect(
    history: &RunHistory,
    phis: &[TestFunction],
    tau: f64,
    params: &SchemeParams,
) -> Result<Vec<f64>> {
    let n = checked_stamp(history, tau)?;
    let grid = &history.states[0].grid;
    let d = grid.dim();
    if phis.len() != d {
        return Err(Error::InvalidTestFunction(
            "momentum defect needs one test function per component",
        ));
    }
    let nc = grid.n_cells();
    let ints: Vec<SpaceIntegrals> = phis
        .iter()
        .map(|p| SpaceIntegrals::compute(grid, p))
        .collect();

    let mut defects = vec![0.0; d];
    let mut coef = vec![0.0; nc];
    for (j, phi) in phis.iter().enumerate() {
        let s_end = &history.states[n];
        let s_0 = &history.states[0];
        for k in 0..nc {
            coef[k] = s_end.rho.data[k] * s_end.u.comps[j].data[k];
        }
        let mut lhs = (phi.time_value)(s_end.t) * dot(&coef, &ints[j].ix);
        for k in 0..nc {
            coef[k] = s_0.rho.data[k] * s_0.u.comps[j].data[k];
        }
        lhs -= (phi.time_value)(s_0.t) * dot(&coef, &ints[j].ix);
        defects[j] = lhs;
    }

    for k in 0..n {
        let state = &history.states[k];
        let (t0, t1) = (history.states[k].t, history.states[k + 1].t);
        let grad_u = crate::operators::grad_vector(grid, &state.u);
        for (j, phi) in phis.iter().enumerate() {
            let dt_weight = (phi.time_value)(t1) - (phi.time_value)(t0);
            let int_t = time_integral(phi, t0, t1);
            for c in 0..nc {
                coef[c] = state.rho.data[c] * state.u.comps[j].data[c];
            }
            defects[j] -= dt_weight * dot(&coef, &ints[j].ix);
            let mut spatial = 0.0;
            for i in 0..d {
                for c in 0..nc {
                    let rho = state.rho.data[c];
                    let uj = state.u.comps[j].data[c];
                    let ui = state.u.comps[i].data[c];
                    let tr = grad_u.trace_at(c);
                    let sym = grad_u.entry(j, i, c) + grad_u.entry(i, j, c);
                    let s_ji =
                        params.mu * sym + if i == j { params.lambda * tr } else { 0.0 };
                    let p = if i == j {
                        pressure(rho, state.theta.data[c])
                    } else {
                        0.0
                    };
                    coef[c] = rho * uj * ui + p - s_ji;
                }
                spatial += dot(&coef, &ints[j].igx[i]);
            }
            defects[j] -= int_t * spatial;
        }
    }
    Ok(defects)
}

/// Signed entropy defect for a nonnegative test function; a nonnegative
/// result means the inequality direction of the weak entropy balance holds.
pub fn entropy_defect(
    history: &RunHistory,
    phi: &TestFunction,
    tau: f64,
    params: &SchemeParams,
) -> Result<f64> {
    let n = checked_stamp(history, tau)?;
    let grid = &history.states[0].grid;
    let d = grid.dim();
    let nc = grid.n_cells();

    // Sign validation: the spatial factor on its quadrature lattice and the
    // time factor on the step intervals.
    let mut x = [0.0f64; 3];
    for k in 0..nc {
        let low = grid.cell_low_corner(k);
        let min_on_cell = crate::fields::tensor_mean(d, &mut x, &low, grid.h(), |p| {
            (phi.space_value)(p).min(0.0)
        });
        if min_on_cell < 0.0 {
            return Err(Error::InvalidTestFunction(
                "entropy defect requires phi >= 0",
            ));
        }
    }
    for k in 0..=n {
        if (phi.time_value)(history.states[k].t) < 0.0 {
            return Err(Error::InvalidTestFunction(
                "entropy defect requires phi >= 0",
            ));
        }
    }

    let ints = SpaceIntegrals::compute(grid, phi);
    let halves = HalfCellIntegrals::compute(grid, phi);
    let gas = &params.gas;

    let entropy_field = |s: &State| -> Vec<f64> {
        (0..nc)
            .map(|k| s.rho.data[k] * entropy(s.rho.data[k], s.theta.data[k], gas))
            .collect()
    };

    let s_end = &history.states[n];
    let s_0 = &history.states[0];
    let lhs = (phi.time_value)(s_end.t) * dot(&entropy_field(s_end), &ints.ix)
        - (phi.time_value)(s_0.t) * dot(&entropy_field(s_0), &ints.ix);

    let mut rhs = 0.0;
    let mut coef = vec![0.0; nc];
    for k in 0..n {
        let state = &history.states[k];
        let (t0, t1) = (history.states[k].t, history.states[k + 1].t);
        let int_t = time_integral(phi, t0, t1);
        let rho_s = entropy_field(state);

        // rho s (dphi/dt + u . grad phi).
        rhs += dot(&rho_s, &ints.ix) * ((phi.time_value)(t1) - (phi.time_value)(t0));
        let mut conv = 0.0;
        for i in 0..d {
            for c in 0..nc {
                coef[c] = rho_s[c] * state.u.comps[i].data[c];
            }
            conv += dot(&coef, &ints.igx[i]);
        }
        rhs += conv * int_t;

        // Viscous heating tested with phi / theta.
        let grad_u = crate::operators::grad_vector(grid, &state.u);
        for c in 0..nc {
            let tr = grad_u.trace_at(c);
            let mut w = 0.0;
            for j in 0..d {
                for i in 0..d {
                    let sym = grad_u.entry(j, i, c) + grad_u.entry(i, j, c);
                    let s_ji =
                        params.mu * sym + if i == j { params.lambda * tr } else { 0.0 };
                    w += s_ji * grad_u.entry(j, i, c);
                }
            }
            coef[c] = w / state.theta.data[c];
        }
        rhs += dot(&coef, &ints.ix) * int_t;

        // Temperature-gradient terms over the half dual cells.
        let mut kappa_quad = 0.0;
        let mut kappa_cross = 0.0;
        for face in grid.faces() {
            let th_in = state.theta.data[face.in_cell];
            let th_out = state.theta.data[face.out_cell];
            let slope = (th_out - th_in) / grid.h();
            let hix = halves.ix[face.index];
            let hig = halves.igx[face.index];
            kappa_quad +=
                slope * slope * (hix[0] / (th_out * th_in) + hix[1] / (th_out * th_out));
            kappa_cross += slope * (hig[0] / th_in + hig[1] / th_out);
        }
        rhs += params.kappa * (kappa_quad - kappa_cross) * int_t;
    }
    Ok(lhs - rhs)
}

/// Assemble the full consistency report for a run: mass defect of `phi`,
/// momentum defect of `phis`, signed entropy defect of `phi_entropy`.
pub fn consistency_report(
    history: &RunHistory,
    phi: &TestFunction,
    phis: &[TestFunction],
    phi_entropy: &TestFunction,
    tau: f64,
    params: &SchemeParams,
) -> Result<ConsistencyReport> {
    let e_rho = mass_defect(history, phi, tau)?;
    let e_m = momentum_defect(history, phis, tau, params)?;
    let e_s_signed = entropy_defect(history, phi_entropy, tau, params)?;
    let e_m_norm = math::norm(&e_m);
    Ok(ConsistencyReport {
        e_rho,
        e_m,
        e_m_norm,
        e_s_signed,
        h: history.states[0].grid.h(),
        dt: history.dt,
        eps: params.flux.eps,
    })
}
