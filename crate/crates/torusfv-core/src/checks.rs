//! Seeded, randomized suite of the discrete identities.
//!
//! Each property is evaluated over both a 2D (`N = 8`) and a 3D (`N = 4`)
//! grid with freshly drawn piecewise constant data per trial; the report
//! carries the worst relative residual seen. The suite backs the `check`
//! command and the discrete-calculus acceptance gate.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::fields::{face_traces, project_w, ScalarField, VectorField};
use crate::flux::{diffusive_flux, FluxParams};
use crate::math;
use crate::mesh::Grid;
use crate::operators;
use crate::rng::SplitMix64;
use crate::thermo::{entropy_hessian_eigenvalues, GasParams, HessianBounds};

/// Outcome of one property over all trials and grids.
#[derive(Debug, Clone)]
pub struct PropertyResult {
    pub name: String,
    /// Worst relative residual (identities) or rate deficiency (orders).
    pub metric: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub trials: usize,
}

impl PropertyResult {
    fn new(name: &str, metric: f64, tolerance: f64, trials: usize) -> Self {
        Self {
            name: String::from(name),
            metric,
            tolerance,
            passed: metric <= tolerance,
            trials,
        }
    }
}

fn random_scalar(grid: &Grid, rng: &mut SplitMix64) -> ScalarField {
    ScalarField::from_fn(grid, |_| rng.uniform(-1.0, 1.0))
}

fn random_vector(grid: &Grid, rng: &mut SplitMix64) -> VectorField {
    VectorField {
        comps: (0..grid.dim()).map(|_| random_scalar(grid, rng)).collect(),
    }
}

fn inner(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    grid.cell_volume() * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

fn rel(residual: f64, scale: f64) -> f64 {
    residual / scale.max(1e-30)
}

/// `int r div_h v + int grad_h r . v = 0`.
fn duality_grad_div(grid: &Grid, rng: &mut SplitMix64) -> f64 {
    let r = random_scalar(grid, rng);
    let v = random_vector(grid, rng);
    let div = operators::div_h(grid, &v);
    let grad = operators::grad_h(grid, &r);
    let lhs = inner(grid, &r.data, &div.data);
    let rhs: f64 = (0..grid.dim())
        .map(|j| inner(grid, &grad.comps[j].data, &v.comps[j].data))
        .sum();
    rel(math::abs(lhs + rhs), math::abs(lhs) + math::abs(rhs))
}

/// `int laplace_h r f = -int grad_e r . grad_e f = int r laplace_h f`.
fn duality_laplace(grid: &Grid, rng: &mut SplitMix64) -> f64 {
    let r = random_scalar(grid, rng);
    let f = random_scalar(grid, rng);
    let a = inner(grid, &operators::laplace_h(grid, &r).data, &f.data);
    let gr = operators::grad_e(grid, &r);
    let gf = operators::grad_e(grid, &f);
    let mid = inner(grid, &gr.data, &gf.data);
    let c = inner(grid, &r.data, &operators::laplace_h(grid, &f).data);
    let scale = math::abs(a) + math::abs(mid) + math::abs(c);
    rel(math::abs(a + mid).max(math::abs(a - c)), scale)
}

/// `int r div_x phi = -int grad_e r . Pi_W phi` for a smooth vector field.
///
/// The cell integrals of `div_x phi` are evaluated through the divergence
/// theorem with the same face means that define `Pi_W phi`, which is what
/// makes the identity exact rather than a quadrature approximation.
fn duality_projection(grid: &Grid, rng: &mut SplitMix64) -> f64 {
    let d = grid.dim();
    let r = random_scalar(grid, rng);
    // Random smooth periodic vector field: each component mixes a couple of
    // low trigonometric modes over all axes.
    let coeffs: Vec<[f64; 6]> = (0..d)
        .map(|_| {
            [
                rng.uniform(-1.0, 1.0),
                rng.uniform(-1.0, 1.0),
                rng.uniform(-1.0, 1.0),
                rng.uniform(-1.0, 1.0),
                rng.uniform(-1.0, 1.0),
                rng.uniform(-1.0, 1.0),
            ]
        })
        .collect();
    let phi = |x: &[f64], i: usize| -> f64 {
        let c = &coeffs[i];
        let tau = 2.0 * core::f64::consts::PI;
        let mut v = c[0];
        for (a, &xa) in x.iter().enumerate() {
            v += c[1 + a] * math::sin(tau * xa) + c[3 + a % 2] * math::cos(tau * 2.0 * xa);
        }
        v
    };
    let w = project_w(grid, phi);
    // int_K div phi = sum over faces of K of |sigma| (Pi_W phi . n).
    let area = grid.face_area();
    let mut div_cell = vec![0.0; grid.n_cells()];
    for face in grid.faces() {
        let flux = area * w.data[face.index];
        div_cell[face.in_cell] += flux;
        div_cell[face.out_cell] -= flux;
    }
    let lhs: f64 = r
        .data
        .iter()
        .zip(&div_cell)
        .map(|(ri, di)| ri * di)
        .sum::<f64>();
    let ge = operators::grad_e(grid, &r);
    let rhs = -grid.cell_volume()
        * ge.data
            .iter()
            .zip(&w.data)
            .map(|(a, b)| a * b)
            .sum::<f64>();
    rel(math::abs(lhs - rhs), math::abs(lhs) + math::abs(rhs))
}

/// `[[f g]] = [[f]]<g> + <f>[[g]]` on every face.
fn product_rule(grid: &Grid, rng: &mut SplitMix64) -> f64 {
    let f = random_scalar(grid, rng);
    let g = random_scalar(grid, rng);
    let fg = ScalarField::from_fn(grid, |k| f.data[k] * g.data[k]);
    let mut worst = 0.0f64;
    for face in grid.faces() {
        let tf = face_traces(&f, &face);
        let tg = face_traces(&g, &face);
        let tfg = face_traces(&fg, &face);
        let rhs = tf.jump * tg.average + tf.average * tg.jump;
        worst = worst.max(rel(
            math::abs(tfg.jump - rhs),
            math::abs(tfg.jump) + math::abs(rhs) + 1.0,
        ));
    }
    worst
}

/// Summing signed diffusive upwind fluxes over all faces of all cells gives
/// exactly zero.
fn flux_telescoping(grid: &Grid, rng: &mut SplitMix64) -> f64 {
    let r = ScalarField::from_fn(grid, |_| rng.uniform(0.1, 2.0));
    let u = random_vector(grid, rng);
    let params = FluxParams::new(rng.uniform(-0.9, 0.9), grid.h()).unwrap();
    let area = grid.face_area();
    let mut per_cell = vec![0.0f64; grid.n_cells()];
    let mut scale = 0.0f64;
    for face in grid.faces() {
        let f = area * diffusive_flux(&r, &u, &face, &params);
        per_cell[face.in_cell] += f;
        per_cell[face.out_cell] -= f;
        scale += math::abs(f);
    }
    rel(math::abs(per_cell.iter().sum::<f64>()), scale)
}

/// Direct Laplacian equals the composition through the dual grid.
fn laplace_composition(grid: &Grid, rng: &mut SplitMix64) -> f64 {
    let r = random_scalar(grid, rng);
    let direct = operators::laplace_h(grid, &r);
    let composed = operators::div_face(grid, &operators::grad_e(grid, &r));
    let mut worst = 0.0f64;
    for (a, b) in direct.data.iter().zip(&composed.data) {
        worst = worst.max(rel(math::abs(a - b), math::abs(*a) + math::abs(*b) + 1.0));
    }
    worst
}

/// Closed-form entropy Hessian eigenvalues stay strictly inside their
/// bounds over random thermodynamic states.
fn hessian_bounds(rng: &mut SplitMix64, samples: usize) -> f64 {
    let gas = GasParams::new(1.4).unwrap();
    let mut worst_violation = 0.0f64;
    for _ in 0..samples {
        let rho = rng.uniform(0.1, 10.0);
        let theta = rng.uniform(0.1, 10.0);
        let (l1, l2) = entropy_hessian_eigenvalues(rho, theta, &gas);
        let b = HessianBounds::new(rho, theta, &gas);
        worst_violation = worst_violation
            .max(b.lower - l1)
            .max(l2 - b.upper);
    }
    worst_violation.max(0.0)
}

/// First-order decay of the face-mean projection error (rate deficiency
/// against the target rate 1, measured over N in {8, 16, 32}).
fn projection_order(d: usize) -> f64 {
    let tau = 2.0 * core::f64::consts::PI;
    let mut errs = Vec::new();
    for n in [8usize, 16, 32] {
        let grid = Grid::new(d, n).unwrap();
        let w = project_w(&grid, |x, i| math::sin(tau * x[i]));
        let mut sup = 0.0f64;
        for face in grid.faces() {
            let c = grid.face_center(face.index);
            for s in [-0.5, -0.25, 0.25, 0.5] {
                let xi = c[face.axis] + s * grid.h();
                sup = sup.max(math::abs(math::sin(tau * xi) - w.data[face.index]));
            }
        }
        errs.push(sup);
    }
    let mut min_rate = f64::INFINITY;
    for pair in errs.windows(2) {
        min_rate = min_rate.min(math::log2(pair[0] / pair[1]));
    }
    (1.0 - min_rate).max(0.0)
}

/// Run the full randomized suite; deterministic for a fixed seed.
pub fn run_invariant_suite(seed: u64, trials: usize) -> Vec<PropertyResult> {
    let grids = [Grid::new(2, 8).unwrap(), Grid::new(3, 4).unwrap()];
    let mut rng = SplitMix64::new(seed);
    let mut results = Vec::new();

    let mut sweep = |name: &str, f: &mut dyn FnMut(&Grid, &mut SplitMix64) -> f64| {
        let mut worst = 0.0f64;
        for grid in &grids {
            for _ in 0..trials {
                worst = worst.max(f(grid, &mut rng));
            }
        }
        PropertyResult::new(name, worst, 1e-12, 2 * trials)
    };

    results.push(sweep("duality-grad-div", &mut duality_grad_div));
    results.push(sweep("duality-laplace", &mut duality_laplace));
    results.push(sweep("duality-projection", &mut duality_projection));
    results.push(sweep("jump-product-rule", &mut product_rule));
    results.push(sweep("flux-telescoping", &mut flux_telescoping));
    results.push(sweep("laplace-composition", &mut laplace_composition));

    let samples = (trials * 1000).max(1000);
    results.push(PropertyResult::new(
        "hessian-eigenvalue-bounds",
        hessian_bounds(&mut rng, samples),
        0.0,
        samples,
    ));
    // Rate deficiency below 0.1 means the observed order is >= 0.9.
    let deficiency = projection_order(2).max(projection_order(3));
    results.push(PropertyResult::new(
        "projection-order",
        deficiency,
        0.1,
        6,
    ));
    results
}
