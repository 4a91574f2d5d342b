//! Piecewise constant fields on cells and faces, the projections onto them,
//! and face traces (jump, average, upwind value).
//!
//! Cell fields live in the space `Q_h` of functions constant on each cell;
//! face fields carry one value per face, i.e. per dual cell. Vector and
//! tensor data are stored structure-of-arrays, one scalar field per
//! component, so the axis-wise kernels stay contiguous.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::mesh::{Face, Grid};

/// 5-point Gauss-Legendre nodes on `[0, 1]`.
///
/// Degree-9 exactness keeps the quadrature error of the cell/face means many
/// orders below the `O(h)` projection estimates being measured.
pub(crate) const GAUSS_NODES: [f64; 5] = [
    0.5 - 0.453_089_922_969_332,
    0.5 - 0.269_234_655_052_841_55,
    0.5,
    0.5 + 0.269_234_655_052_841_55,
    0.5 + 0.453_089_922_969_332,
];

/// Matching weights, normalized to sum to one (mean-value weights).
pub(crate) const GAUSS_WEIGHTS: [f64; 5] = [
    0.118_463_442_528_094_54,
    0.239_314_335_249_683_23,
    0.284_444_444_444_444_44,
    0.239_314_335_249_683_23,
    0.118_463_442_528_094_54,
];

/// Scalar field in `Q_h`: one value per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            data: vec![0.0; grid.n_cells()],
        }
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Self {
            data: vec![value; grid.n_cells()],
        }
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut(usize) -> f64) -> Self {
        Self {
            data: (0..grid.n_cells()).map(|k| f(k)).collect(),
        }
    }

    #[inline(always)]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline(always)]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// `sum_K |K| v_K`, the exact integral of the piecewise constant field.
    pub fn integral(&self, grid: &Grid) -> f64 {
        grid.cell_volume() * self.data.iter().sum::<f64>()
    }

    /// `L^2` norm: `h^(d/2)` times the Euclidean norm of the values.
    pub fn l2_norm(&self, grid: &Grid) -> f64 {
        math::sqrt(grid.cell_volume()) * math::norm(&self.data)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `self += a * other`, componentwise.
    pub fn axpy(&mut self, a: f64, other: &ScalarField) {
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    pub fn scale(&mut self, a: f64) {
        for x in &mut self.data {
            *x *= a;
        }
    }
}

/// Vector field in `Q_h^d`, stored one scalar field per component.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub comps: Vec<ScalarField>,
}

impl VectorField {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            comps: (0..grid.dim()).map(|_| ScalarField::zeros(grid)).collect(),
        }
    }

    #[inline(always)]
    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    /// Euclidean norm of the vector value at cell `k`.
    pub fn norm_at(&self, k: usize) -> f64 {
        math::sqrt(self.comps.iter().map(|c| c.data[k] * c.data[k]).sum())
    }

    /// `L^2` norm over all components.
    pub fn l2_norm(&self, grid: &Grid) -> f64 {
        let sq: f64 = self
            .comps
            .iter()
            .map(|c| c.data.iter().map(|v| v * v).sum::<f64>())
            .sum();
        math::sqrt(grid.cell_volume() * sq)
    }

    pub fn axpy(&mut self, a: f64, other: &VectorField) {
        for (x, y) in self.comps.iter_mut().zip(&other.comps) {
            x.axpy(a, y);
        }
    }
}

/// Tensor field: `rows[j].comps[i]` holds the `(j, i)` entry, laid out as the
/// row-wise gradient convention `(grad u)_j = grad(u_j)`.
#[derive(Debug, Clone)]
pub struct TensorField {
    pub rows: Vec<VectorField>,
}

impl TensorField {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            rows: (0..grid.dim()).map(|_| VectorField::zeros(grid)).collect(),
        }
    }

    #[inline(always)]
    pub fn entry(&self, j: usize, i: usize, k: usize) -> f64 {
        self.rows[j].comps[i].data[k]
    }

    /// Trace at cell `k`.
    pub fn trace_at(&self, k: usize) -> f64 {
        (0..self.rows.len()).map(|j| self.entry(j, j, k)).sum()
    }

    /// Frobenius `L^2` norm.
    pub fn l2_norm(&self, grid: &Grid) -> f64 {
        let sq: f64 = self
            .rows
            .iter()
            .map(|r| {
                r.comps
                    .iter()
                    .map(|c| c.data.iter().map(|v| v * v).sum::<f64>())
                    .sum::<f64>()
            })
            .sum();
        math::sqrt(grid.cell_volume() * sq)
    }
}

/// Scalar data on faces (one value per dual cell), axis families contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField {
    pub data: Vec<f64>,
}

impl FaceField {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            data: vec![0.0; grid.n_faces()],
        }
    }

    #[inline(always)]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline(always)]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// `L^2` norm over the dual grid: every dual cell has measure `h^d`.
    pub fn l2_norm(&self, grid: &Grid) -> f64 {
        math::sqrt(grid.cell_volume()) * math::norm(&self.data)
    }
}

/// Traces of a cell field at one face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Traces {
    pub v_in: f64,
    pub v_out: f64,
    /// `v_out - v_in`.
    pub jump: f64,
    /// `(v_in + v_out) / 2`.
    pub average: f64,
}

/// In/out values, jump and average of `field` at `face`.
#[inline(always)]
pub fn face_traces(field: &ScalarField, face: &Face) -> Traces {
    let v_in = field.data[face.in_cell];
    let v_out = field.data[face.out_cell];
    Traces {
        v_in,
        v_out,
        jump: v_out - v_in,
        average: 0.5 * (v_in + v_out),
    }
}

/// Upwind selection kernel: `v_in` for positive normal speed, `v_out` for
/// negative, the average at the tie (the flux formula is insensitive to the
/// tie, but the upwind-density diagnostic needs a deterministic rule).
#[inline(always)]
pub fn upwind_of(v_in: f64, v_out: f64, normal_speed: f64) -> f64 {
    if normal_speed > 0.0 {
        v_in
    } else if normal_speed < 0.0 {
        v_out
    } else {
        0.5 * (v_in + v_out)
    }
}

/// Upwind value of `field` at `face` for the given normal speed.
#[inline(always)]
pub fn upwind_value(field: &ScalarField, face: &Face, normal_speed: f64) -> f64 {
    upwind_of(
        field.data[face.in_cell],
        field.data[face.out_cell],
        normal_speed,
    )
}

/// Exact-mean projection `Pi_Q` of a smooth sampler onto `Q_h`.
///
/// Cell means are evaluated with the tensorized Gauss rule above; `x` is
/// passed to the sampler as a slice of length `d`.
pub fn project_q(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> ScalarField {
    let d = grid.dim();
    let h = grid.h();
    let mut data = Vec::with_capacity(grid.n_cells());
    let mut x = [0.0f64; 3];
    for k in 0..grid.n_cells() {
        let low = grid.cell_low_corner(k);
        data.push(tensor_mean(d, &mut x, &low, h, &f));
    }
    ScalarField { data }
}

/// Componentwise `Pi_Q` of a vector sampler; `f(x, j)` is component `j`.
pub fn project_q_vector(grid: &Grid, f: impl Fn(&[f64], usize) -> f64) -> VectorField {
    let comps = (0..grid.dim())
        .map(|j| project_q(grid, |x| f(x, j)))
        .collect();
    VectorField { comps }
}

/// Face-mean projection `Pi_W`: component `i` of the sampler averaged over
/// every face orthogonal to `e_i`.
pub fn project_w(grid: &Grid, f: impl Fn(&[f64], usize) -> f64) -> FaceField {
    let d = grid.dim();
    let h = grid.h();
    let mut data = vec![0.0; grid.n_faces()];
    let mut x = [0.0f64; 3];
    for face in grid.faces() {
        let center = grid.face_center(face.index);
        data[face.index] = face_mean(d, face.axis, &mut x, &center, h, |x| f(x, face.axis));
    }
    FaceField { data }
}

/// Mean of `f` over the box `[low, low + h]^d` (tensor Gauss rule).
pub(crate) fn tensor_mean(
    d: usize,
    x: &mut [f64; 3],
    low: &[f64; 3],
    h: f64,
    f: impl Fn(&[f64]) -> f64,
) -> f64 {
    box_mean(d, x, low, &[h; 3], f)
}

/// Mean of `f` over the box with per-axis extents `ext` from `low`.
pub(crate) fn box_mean(
    d: usize,
    x: &mut [f64; 3],
    low: &[f64; 3],
    ext: &[f64; 3],
    f: impl Fn(&[f64]) -> f64,
) -> f64 {
    let mut sum = 0.0;
    match d {
        2 => {
            for (n0, w0) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                x[0] = low[0] + n0 * ext[0];
                for (n1, w1) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                    x[1] = low[1] + n1 * ext[1];
                    sum += w0 * w1 * f(&x[..2]);
                }
            }
        }
        3 => {
            for (n0, w0) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                x[0] = low[0] + n0 * ext[0];
                for (n1, w1) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                    x[1] = low[1] + n1 * ext[1];
                    for (n2, w2) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                        x[2] = low[2] + n2 * ext[2];
                        sum += w0 * w1 * w2 * f(&x[..3]);
                    }
                }
            }
        }
        _ => unreachable!("dimension is validated at grid construction"),
    }
    sum
}

/// Mean of `f` over the face orthogonal to `axis` centered at `center`.
fn face_mean(
    d: usize,
    axis: usize,
    x: &mut [f64; 3],
    center: &[f64; 3],
    h: f64,
    f: impl Fn(&[f64]) -> f64,
) -> f64 {
    x[..d].copy_from_slice(&center[..d]);
    let tangential: Vec<usize> = (0..d).filter(|&a| a != axis).collect();
    let mut sum = 0.0;
    match tangential.len() {
        1 => {
            let t = tangential[0];
            for (n0, w0) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                x[t] = center[t] + (n0 - 0.5) * h;
                sum += w0 * f(&x[..d]);
            }
        }
        2 => {
            let (t0, t1) = (tangential[0], tangential[1]);
            for (n0, w0) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                x[t0] = center[t0] + (n0 - 0.5) * h;
                for (n1, w1) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                    x[t1] = center[t1] + (n1 - 0.5) * h;
                    sum += w0 * w1 * f(&x[..d]);
                }
            }
        }
        _ => unreachable!(),
    }
    sum
}
