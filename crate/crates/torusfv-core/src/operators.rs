//! Discrete differential operators on the periodic grid.
//!
//! Cell-based operators (`grad_h`, `div_h`) average over the faces of a cell
//! and reduce to central differences on the uniform grid; face-based
//! operators (`grad_e`, `laplace_h`) act through the jumps over faces of the
//! dual grid. All of them are matrix-free axis-wise sweeps with periodic
//! index wrap, which is what makes the telescoping identities exact.
//!
//! The summation-by-parts dualities tying them together,
//!
//! * `int r div_h v = -int grad_h r . v`
//! * `int laplace_h r f = -int grad_e r . grad_e f = int r laplace_h f`
//! * `int r div_x phi = -int grad_e r . Pi_W phi`
//!
//! are exercised by the randomized suite in [`crate::checks`].

use crate::fields::{FaceField, ScalarField, TensorField, VectorField};
use crate::mesh::Grid;

/// Central-difference gradient per cell: component `i` is
/// `(r_{K+e_i} - r_{K-e_i}) / 2h`.
pub fn grad_h(grid: &Grid, r: &ScalarField) -> VectorField {
    let mut out = VectorField::zeros(grid);
    grad_h_into(grid, r, &mut out);
    out
}

pub fn grad_h_into(grid: &Grid, r: &ScalarField, out: &mut VectorField) {
    let inv2h = 0.5 / grid.h();
    for axis in 0..grid.dim() {
        let plus = grid.plus_table(axis);
        let minus = grid.minus_table(axis);
        let dst = &mut out.comps[axis].data;
        let src = &r.data;
        for k in 0..src.len() {
            dst[k] = (src[plus[k] as usize] - src[minus[k] as usize]) * inv2h;
        }
    }
}

/// Cell divergence of a vector field: sum of central differences.
pub fn div_h(grid: &Grid, v: &VectorField) -> ScalarField {
    let mut out = ScalarField::zeros(grid);
    div_h_into(grid, v, &mut out);
    out
}

pub fn div_h_into(grid: &Grid, v: &VectorField, out: &mut ScalarField) {
    let inv2h = 0.5 / grid.h();
    out.data.iter_mut().for_each(|x| *x = 0.0);
    for axis in 0..grid.dim() {
        let plus = grid.plus_table(axis);
        let minus = grid.minus_table(axis);
        let src = &v.comps[axis].data;
        for (k, dst) in out.data.iter_mut().enumerate() {
            *dst += (src[plus[k] as usize] - src[minus[k] as usize]) * inv2h;
        }
    }
}

/// Normal difference quotient per face: `[[r]] / h` in the direction of the
/// face normal.
pub fn grad_e(grid: &Grid, r: &ScalarField) -> FaceField {
    let mut out = FaceField::zeros(grid);
    grad_e_into(grid, r, &mut out);
    out
}

pub fn grad_e_into(grid: &Grid, r: &ScalarField, out: &mut FaceField) {
    let inv_h = 1.0 / grid.h();
    let nc = grid.n_cells();
    for axis in 0..grid.dim() {
        let plus = grid.plus_table(axis);
        let dst = &mut out.data[axis * nc..(axis + 1) * nc];
        for (k, d) in dst.iter_mut().enumerate() {
            *d = (r.data[plus[k] as usize] - r.data[k]) * inv_h;
        }
    }
}

/// Divergence of a face-normal scalar field back onto cells:
/// `(1/h) * sum over the faces of K of the outward-signed face value`.
pub fn div_face(grid: &Grid, g: &FaceField) -> ScalarField {
    let mut out = ScalarField::zeros(grid);
    div_face_into(grid, g, &mut out);
    out
}

pub fn div_face_into(grid: &Grid, g: &FaceField, out: &mut ScalarField) {
    let inv_h = 1.0 / grid.h();
    let nc = grid.n_cells();
    out.data.iter_mut().for_each(|x| *x = 0.0);
    for axis in 0..grid.dim() {
        let minus = grid.minus_table(axis);
        let src = &g.data[axis * nc..(axis + 1) * nc];
        for (k, dst) in out.data.iter_mut().enumerate() {
            *dst += (src[k] - src[minus[k] as usize]) * inv_h;
        }
    }
}

/// Compact `(2d+1)`-point Laplacian, `laplace_h = div_face(grad_e(.))`.
///
/// The arithmetic mirrors the composition term by term so the two routes are
/// bit-identical.
pub fn laplace_h(grid: &Grid, r: &ScalarField) -> ScalarField {
    let mut out = ScalarField::zeros(grid);
    laplace_h_into(grid, r, &mut out);
    out
}

pub fn laplace_h_into(grid: &Grid, r: &ScalarField, out: &mut ScalarField) {
    let inv_h = 1.0 / grid.h();
    out.data.iter_mut().for_each(|x| *x = 0.0);
    for axis in 0..grid.dim() {
        let plus = grid.plus_table(axis);
        let minus = grid.minus_table(axis);
        let src = &r.data;
        for (k, dst) in out.data.iter_mut().enumerate() {
            let fwd = (src[plus[k] as usize] - src[k]) * inv_h;
            let bwd = (src[k] - src[minus[k] as usize]) * inv_h;
            *dst += (fwd - bwd) * inv_h;
        }
    }
}

/// Row-wise gradient of a vector field: row `j` is `grad_h(u_j)`.
pub fn grad_vector(grid: &Grid, u: &VectorField) -> TensorField {
    let mut out = TensorField::zeros(grid);
    grad_vector_into(grid, u, &mut out);
    out
}

pub fn grad_vector_into(grid: &Grid, u: &VectorField, out: &mut TensorField) {
    for j in 0..grid.dim() {
        grad_h_into(grid, &u.comps[j], &mut out.rows[j]);
    }
}

/// Symmetric part `(T + T^t) / 2`.
pub fn sym_part(grid: &Grid, t: &TensorField) -> TensorField {
    let d = t.rows.len();
    let mut out = TensorField::zeros(grid);
    for j in 0..d {
        for i in 0..d {
            let dst = &mut out.rows[j].comps[i].data;
            let a = &t.rows[j].comps[i].data;
            let b = &t.rows[i].comps[j].data;
            for k in 0..dst.len() {
                dst[k] = 0.5 * (a[k] + b[k]);
            }
        }
    }
    out
}

/// Row-wise divergence of a tensor field: component `j` is `div_h(row_j)`.
pub fn div_tensor(grid: &Grid, t: &TensorField) -> VectorField {
    let mut out = VectorField::zeros(grid);
    div_tensor_into(grid, t, &mut out);
    out
}

pub fn div_tensor_into(grid: &Grid, t: &TensorField, out: &mut VectorField) {
    for j in 0..grid.dim() {
        div_h_into(grid, &t.rows[j], &mut out.comps[j]);
    }
}
