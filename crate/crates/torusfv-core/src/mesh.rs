//! Uniform structured periodic mesh of the torus `[0,1]^d`.
//!
//! Cells are the `N^d` congruent squares/cubes of width `h = 1/N`, indexed
//! row-major over their integer coordinates (last coordinate fastest).
//! Faces are grouped by the axis they are orthogonal to; the face of axis
//! `i` with index `k` separates cell `k` from its `+e_i` neighbor, and its
//! unit normal is fixed once and for all as `+e_i`, pointing from the "in"
//! cell to the "out" cell. Every face owns a dual cell made of the two
//! adjacent half-cells, of measure `h^d`.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// One face of the mesh, oriented from `in_cell` to `out_cell` along `axis`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Face {
    /// Global face index (`axis * n_cells + in_cell`).
    pub index: usize,
    /// Axis the face is orthogonal to (`0..d`).
    pub axis: usize,
    /// Cell on the `-e_axis` side; traces from here are `v_in`.
    pub in_cell: usize,
    /// Cell on the `+e_axis` side (periodic wrap); traces are `v_out`.
    pub out_cell: usize,
}

/// Uniform periodic Cartesian grid.
#[derive(Debug)]
pub struct Grid {
    d: usize,
    n: usize,
    h: f64,
    n_cells: usize,
    /// `plus[axis][k]`: index of the `+e_axis` neighbor of cell `k`.
    plus: Vec<Vec<u32>>,
    /// `minus[axis][k]`: index of the `-e_axis` neighbor of cell `k`.
    minus: Vec<Vec<u32>>,
}

impl Grid {
    /// Build the grid with `n` cells per axis in dimension `d`.
    ///
    /// `n = 2` is permitted even though the two axis neighbors of a cell then
    /// coincide; all operator formulas stay well defined.
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if d != 2 && d != 3 {
            return Err(Error::InvalidDimension(d));
        }
        if n < 2 {
            return Err(Error::TooFewCells(n));
        }
        let n_cells = n.pow(d as u32);
        debug_assert!(n_cells <= u32::MAX as usize);
        let mut plus = Vec::with_capacity(d);
        let mut minus = Vec::with_capacity(d);
        // Stride of axis i in the row-major layout: n^(d-1-i).
        for axis in 0..d {
            let stride = n.pow((d - 1 - axis) as u32);
            let period = stride * n;
            let mut p = Vec::with_capacity(n_cells);
            let mut m = Vec::with_capacity(n_cells);
            for k in 0..n_cells {
                let base = k - k % period;
                let off = k - base;
                p.push((base + (off + stride) % period) as u32);
                m.push((base + (off + period - stride) % period) as u32);
            }
            plus.push(p);
            minus.push(m);
        }
        Ok(Self {
            d,
            n,
            h: 1.0 / n as f64,
            n_cells,
            plus,
            minus,
        })
    }

    #[inline(always)]
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Cells per axis.
    #[inline(always)]
    pub fn cells_per_axis(&self) -> usize {
        self.n
    }

    /// Mesh width `h = 1/N`.
    #[inline(always)]
    pub fn h(&self) -> f64 {
        self.h
    }

    #[inline(always)]
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Total number of faces, `d * N^d`.
    #[inline(always)]
    pub fn n_faces(&self) -> usize {
        self.d * self.n_cells
    }

    /// Cell measure `|K| = h^d`.
    #[inline(always)]
    pub fn cell_volume(&self) -> f64 {
        if self.d == 2 {
            self.h * self.h
        } else {
            self.h * self.h * self.h
        }
    }

    /// Face measure `|sigma| = h^(d-1)`.
    #[inline(always)]
    pub fn face_area(&self) -> f64 {
        if self.d == 2 {
            self.h
        } else {
            self.h * self.h
        }
    }

    /// `+e_axis` neighbor of cell `k`.
    #[inline(always)]
    pub fn plus(&self, axis: usize, k: usize) -> usize {
        self.plus[axis][k] as usize
    }

    /// `-e_axis` neighbor of cell `k`.
    #[inline(always)]
    pub fn minus(&self, axis: usize, k: usize) -> usize {
        self.minus[axis][k] as usize
    }

    #[inline(always)]
    pub(crate) fn plus_table(&self, axis: usize) -> &[u32] {
        &self.plus[axis]
    }

    #[inline(always)]
    pub(crate) fn minus_table(&self, axis: usize) -> &[u32] {
        &self.minus[axis]
    }

    /// Integer coordinates of cell `k`; only the first `d` entries are used.
    pub fn cell_coords(&self, k: usize) -> [usize; 3] {
        let mut c = [0usize; 3];
        let mut rem = k;
        for axis in (0..self.d).rev() {
            c[axis] = rem % self.n;
            rem /= self.n;
        }
        c
    }

    /// Row-major index of the cell with the given coordinates.
    pub fn cell_index(&self, coords: &[usize]) -> usize {
        let mut k = 0;
        for axis in 0..self.d {
            k = k * self.n + coords[axis] % self.n;
        }
        k
    }

    /// Barycenter of cell `k` at `(t + 1/2) h` per axis.
    pub fn cell_center(&self, k: usize) -> [f64; 3] {
        let c = self.cell_coords(k);
        let mut x = [0.0; 3];
        for axis in 0..self.d {
            x[axis] = (c[axis] as f64 + 0.5) * self.h;
        }
        x
    }

    /// Lower corner of cell `k`.
    pub fn cell_low_corner(&self, k: usize) -> [f64; 3] {
        let c = self.cell_coords(k);
        let mut x = [0.0; 3];
        for axis in 0..self.d {
            x[axis] = c[axis] as f64 * self.h;
        }
        x
    }

    /// Global index of the face of `axis` on the `+e_axis` side of `cell`.
    #[inline(always)]
    pub fn face_index(&self, axis: usize, cell: usize) -> usize {
        axis * self.n_cells + cell
    }

    /// Face with global index `f`.
    #[inline(always)]
    pub fn face(&self, f: usize) -> Face {
        let axis = f / self.n_cells;
        let in_cell = f % self.n_cells;
        Face {
            index: f,
            axis,
            in_cell,
            out_cell: self.plus(axis, in_cell),
        }
    }

    /// The two incident cells and the axis of a face, `(in, out, axis)`.
    ///
    /// The orientation is fixed: the normal `e_axis` points from `in` to
    /// `out`, consistently with the jump/average convention.
    #[inline(always)]
    pub fn face_cells(&self, face: &Face) -> (usize, usize, usize) {
        (face.in_cell, face.out_cell, face.axis)
    }

    /// Barycenter of face `f` (cell center shifted by `h/2` along the axis).
    pub fn face_center(&self, f: usize) -> [f64; 3] {
        let face = self.face(f);
        let mut x = self.cell_center(face.in_cell);
        x[face.axis] = wrap_unit(x[face.axis] + 0.5 * self.h);
        x
    }

    /// Iterate over all faces, axis families in order.
    pub fn faces(&self) -> impl Iterator<Item = Face> + '_ {
        (0..self.n_faces()).map(move |f| self.face(f))
    }

    /// Whether two grids index the same mesh.
    pub fn same_layout(&self, other: &Grid) -> bool {
        self.d == other.d && self.n == other.n
    }
}

#[inline(always)]
fn wrap_unit(x: f64) -> f64 {
    if x >= 1.0 {
        x - 1.0
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn counts_2d() {
        let g = Grid::new(2, 8).unwrap();
        assert_eq!(g.n_cells(), 64);
        assert_eq!(g.n_faces(), 128);
        assert_eq!(g.h(), 0.125);
    }

    #[test]
    fn counts_3d() {
        let g = Grid::new(3, 4).unwrap();
        assert_eq!(g.n_cells(), 64);
        assert_eq!(g.n_faces(), 192);
        assert_eq!(g.h(), 0.25);
    }

    #[test]
    fn rejects_degenerate() {
        assert_eq!(Grid::new(2, 1).unwrap_err(), Error::TooFewCells(1));
        assert_eq!(Grid::new(1, 8).unwrap_err(), Error::InvalidDimension(1));
        assert_eq!(Grid::new(4, 8).unwrap_err(), Error::InvalidDimension(4));
    }

    #[test]
    fn adjacency_and_periodic_wrap() {
        let g = Grid::new(2, 4).unwrap();
        // Face right of cell (0,0) along axis 0.
        let k00 = g.cell_index(&[0, 0]);
        let f = g.face(g.face_index(0, k00));
        assert_eq!(f.in_cell, k00);
        assert_eq!(f.out_cell, g.cell_index(&[1, 0]));
        // Periodic wrap: right of (3,0) is (0,0).
        let k30 = g.cell_index(&[3, 0]);
        let f = g.face(g.face_index(0, k30));
        assert_eq!(f.in_cell, k30);
        assert_eq!(f.out_cell, k00);
    }

    #[test]
    fn every_cell_touched_2d_times() {
        // Exhaustive count oracle on N = 4 in both dimensions.
        for (d, n) in [(2usize, 4usize), (3, 4)] {
            let g = Grid::new(d, n).unwrap();
            let mut touches = vec![0usize; g.n_cells()];
            let mut as_in = vec![0usize; g.n_cells()];
            let mut as_out = vec![0usize; g.n_cells()];
            for f in g.faces() {
                touches[f.in_cell] += 1;
                touches[f.out_cell] += 1;
                as_in[f.in_cell] += 1;
                as_out[f.out_cell] += 1;
            }
            assert!(touches.iter().all(|&t| t == 2 * d));
            assert!(as_in.iter().all(|&t| t == d));
            assert!(as_out.iter().all(|&t| t == d));
        }
    }

    #[test]
    fn involution_consistency() {
        // The face left of out_cell along its axis is the same face.
        let g = Grid::new(3, 3).unwrap();
        for f in g.faces() {
            let back = g.face_index(f.axis, g.minus(f.axis, f.out_cell));
            assert_eq!(back, f.index);
            let (in_cell, out_cell, axis) = g.face_cells(&f);
            assert_eq!((in_cell, out_cell, axis), (f.in_cell, f.out_cell, f.axis));
        }
    }

    #[test]
    fn volumes_sum_to_one() {
        for (d, n) in [(2usize, 7usize), (3, 5)] {
            let g = Grid::new(d, n).unwrap();
            let total: f64 = (0..g.n_cells()).map(|_| g.cell_volume()).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn centers_and_face_centers() {
        let g = Grid::new(2, 4).unwrap();
        let k = g.cell_index(&[1, 2]);
        let x = g.cell_center(k);
        assert_eq!(&x[..2], &[0.375, 0.625]);
        let fx = g.face_center(g.face_index(1, k));
        assert_eq!(&fx[..2], &[0.375, 0.75]);
        // Wrap of the face beyond the last cell.
        let k_last = g.cell_index(&[3, 3]);
        let fx = g.face_center(g.face_index(0, k_last));
        assert_eq!(&fx[..2], &[0.0, 0.875]);
    }

    #[test]
    fn coords_roundtrip() {
        let g = Grid::new(3, 4).unwrap();
        for k in 0..g.n_cells() {
            let c = g.cell_coords(k);
            assert_eq!(g.cell_index(&c[..3]), k);
        }
    }

    #[test]
    fn n_equals_two_neighbors_coincide() {
        let g = Grid::new(2, 2).unwrap();
        for k in 0..g.n_cells() {
            for axis in 0..2 {
                assert_eq!(g.plus(axis, k), g.minus(axis, k));
            }
        }
    }
}
