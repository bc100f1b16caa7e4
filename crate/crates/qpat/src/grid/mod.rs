//! Tensor-product grids on the unit square and unit cube, together with the
//! fields, boundary traces, quadrature rules, and discrete differential
//! operators the rest of the crate is built on.
//!
//! Nodes live at coordinates `i * h` with `h = 1/(n-1)`, stored row-major
//! (`x` fastest). Boundary nodes are enumerated deterministically:
//! counterclockwise by arc length in 2D (a closed cycle of uniform step `h`),
//! face-major lexicographic in 3D. All quadrature is trapezoidal, so constants
//! integrate exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod calculus;
pub mod field_io;
pub mod norms;

pub use calculus::{ball_integral, gradient, laplacian, tangential_gradient};
pub use norms::{
    boundary_h_half_norm, boundary_l2_norm, boundary_mean, gagliardo_h_half_norm, interior_l2_norm,
    interior_linf_norm,
};

/// Smallest and largest admissible nodes-per-axis counts.
pub const MIN_NODES_PER_AXIS: usize = 17;
pub const MAX_NODES_PER_AXIS: usize = 1025;

/// The two canonical domains the toolkit works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    #[serde(rename = "unit-square")]
    UnitSquare,
    #[serde(rename = "unit-cube")]
    UnitCube,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::UnitSquare => "unit-square",
            Domain::UnitCube => "unit-cube",
        }
    }
}

/// Uniform tensor grid over the unit square (`dim = 2`) or cube (`dim = 3`).
///
/// `n` is odd so that the domain center is a node, which symmetric phantoms
/// and critical-point probes rely on. Only serialization is derived; grids
/// deserialize through `(dim, n)` descriptors and [`Grid::new`], so the
/// spacing is always consistent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    dim: usize,
    n: usize,
    #[serde(skip)]
    h: f64,
}

impl Grid {
    /// Builds a grid with `n` nodes per axis and spacing `1/(n-1)`.
    pub fn new(dim: usize, n: usize) -> Result<Grid> {
        if dim != 2 && dim != 3 {
            return Err(Error::Parameter(format!("dim must be 2 or 3, got {dim}")));
        }
        if n.is_multiple_of(2) {
            return Err(Error::Parameter(format!(
                "nodes per axis must be odd, got {n}"
            )));
        }
        if !(MIN_NODES_PER_AXIS..=MAX_NODES_PER_AXIS).contains(&n) {
            return Err(Error::Parameter(format!(
                "nodes per axis must lie in [{MIN_NODES_PER_AXIS}, {MAX_NODES_PER_AXIS}], got {n}"
            )));
        }
        Ok(Grid {
            dim,
            n,
            h: 1.0 / (n - 1) as f64,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nodes per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Grid spacing `1/(n-1)`.
    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn domain(&self) -> Domain {
        if self.dim == 2 {
            Domain::UnitSquare
        } else {
            Domain::UnitCube
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn num_boundary_nodes(&self) -> usize {
        self.num_nodes() - (self.n - 2).pow(self.dim as u32)
    }

    /// Flat index of the node with per-axis indices `(ix, iy)` or `(ix, iy, iz)`.
    #[inline]
    pub fn node_index(&self, ijk: [usize; 3]) -> usize {
        debug_assert!(ijk[0] < self.n && ijk[1] < self.n);
        if self.dim == 2 {
            debug_assert_eq!(ijk[2], 0);
            ijk[1] * self.n + ijk[0]
        } else {
            (ijk[2] * self.n + ijk[1]) * self.n + ijk[0]
        }
    }

    /// Per-axis indices of a flat node index; the unused third entry is 0.
    #[inline]
    pub fn node_ijk(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        if self.dim == 2 {
            [idx % n, idx / n, 0]
        } else {
            [idx % n, (idx / n) % n, idx / (n * n)]
        }
    }

    /// Coordinates of a node; the unused third entry is 0.
    #[inline]
    pub fn node_coords(&self, idx: usize) -> [f64; 3] {
        let ijk = self.node_ijk(idx);
        [
            ijk[0] as f64 * self.h,
            ijk[1] as f64 * self.h,
            ijk[2] as f64 * self.h,
        ]
    }

    #[inline]
    pub fn is_boundary(&self, idx: usize) -> bool {
        let ijk = self.node_ijk(idx);
        (0..self.dim).any(|a| ijk[a] == 0 || ijk[a] == self.n - 1)
    }

    /// Euclidean distance from a node to the boundary of the domain.
    #[inline]
    pub fn boundary_distance(&self, idx: usize) -> f64 {
        let x = self.node_coords(idx);
        (0..self.dim)
            .map(|a| x[a].min(1.0 - x[a]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Trapezoidal quadrature weight of a node for interior integrals:
    /// `h^dim` times 1/2 per axis on which the node is extreme.
    #[inline]
    pub fn interior_weight(&self, idx: usize) -> f64 {
        let ijk = self.node_ijk(idx);
        let mut w = self.h.powi(self.dim as i32);
        for a in 0..self.dim {
            if ijk[a] == 0 || ijk[a] == self.n - 1 {
                w *= 0.5;
            }
        }
        w
    }

    /// Deterministic enumeration of the boundary nodes.
    ///
    /// 2D: counterclockwise cycle starting at the origin, uniform arc step `h`.
    /// 3D: face-major (x=0, x=1, y=0, y=1, z=0, z=1), lexicographic within a
    /// face, each node listed once (edge and corner nodes belong to the first
    /// face that contains them).
    pub fn boundary_nodes(&self) -> Vec<usize> {
        let n = self.n;
        if self.dim == 2 {
            let mut ids = Vec::with_capacity(4 * (n - 1));
            for ix in 0..n - 1 {
                ids.push(self.node_index([ix, 0, 0]));
            }
            for iy in 0..n - 1 {
                ids.push(self.node_index([n - 1, iy, 0]));
            }
            for ix in (1..n).rev() {
                ids.push(self.node_index([ix, n - 1, 0]));
            }
            for iy in (1..n).rev() {
                ids.push(self.node_index([0, iy, 0]));
            }
            ids
        } else {
            let mut claimed = vec![false; self.num_nodes()];
            let mut ids = Vec::with_capacity(self.num_boundary_nodes());
            for (axis, side) in Self::face_list() {
                let fixed = if side == 0 { 0 } else { n - 1 };
                let (a, b) = Self::face_axes(axis);
                for ia in 0..n {
                    for ib in 0..n {
                        let mut ijk = [0usize; 3];
                        ijk[axis] = fixed;
                        ijk[a] = ia;
                        ijk[b] = ib;
                        let idx = self.node_index(ijk);
                        if !claimed[idx] {
                            claimed[idx] = true;
                            ids.push(idx);
                        }
                    }
                }
            }
            ids
        }
    }

    /// Quadrature weights aligned with [`Grid::boundary_nodes`].
    ///
    /// 2D: uniform `h` (closed curve). 3D: per-face 2D trapezoidal weights,
    /// summed over every face a node lies on, so the weights add up to the
    /// exact surface area 6.
    pub fn boundary_weights(&self) -> Vec<f64> {
        let n = self.n;
        if self.dim == 2 {
            return vec![self.h; 4 * (n - 1)];
        }
        let mut acc = vec![0.0f64; self.num_nodes()];
        let h2 = self.h * self.h;
        for (axis, side) in Self::face_list() {
            let fixed = if side == 0 { 0 } else { n - 1 };
            let (a, b) = Self::face_axes(axis);
            for ia in 0..n {
                let wa = if ia == 0 || ia == n - 1 { 0.5 } else { 1.0 };
                for ib in 0..n {
                    let wb = if ib == 0 || ib == n - 1 { 0.5 } else { 1.0 };
                    let mut ijk = [0usize; 3];
                    ijk[axis] = fixed;
                    ijk[a] = ia;
                    ijk[b] = ib;
                    acc[self.node_index(ijk)] += h2 * wa * wb;
                }
            }
        }
        self.boundary_nodes().iter().map(|&idx| acc[idx]).collect()
    }

    /// The six cube faces in enumeration order: (axis, side).
    pub(crate) fn face_list() -> [(usize, usize); 6] {
        [(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)]
    }

    /// The two free axes of a face, in increasing order.
    pub(crate) fn face_axes(axis: usize) -> (usize, usize) {
        match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        }
    }
}

/// Nodal values of a scalar function on a grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn constant(grid: Grid, value: f64) -> ScalarField {
        ScalarField {
            grid,
            values: vec![value; grid.num_nodes()],
        }
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64; 3]) -> f64) -> ScalarField {
        let values = (0..grid.num_nodes())
            .map(|idx| f(&grid.node_coords(idx)))
            .collect();
        ScalarField { grid, values }
    }

    /// Wraps raw nodal values, validating length and finiteness.
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<ScalarField> {
        if values.len() != grid.num_nodes() {
            return Err(Error::Parameter(format!(
                "field length {} does not match node count {}",
                values.len(),
                grid.num_nodes()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!(
                "non-finite field value at node {pos}"
            )));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Nodewise combination of two fields on the same grid.
    pub fn zip(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<ScalarField> {
        same_grid(self.grid, other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(ScalarField {
            grid: self.grid,
            values,
        })
    }
}

/// One real component per axis per node, axis-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    components: Vec<f64>,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> VectorField {
        VectorField {
            grid,
            components: vec![0.0; grid.dim() * grid.num_nodes()],
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        let m = self.grid.num_nodes();
        &self.components[axis * m..(axis + 1) * m]
    }

    pub fn component_mut(&mut self, axis: usize) -> &mut [f64] {
        let m = self.grid.num_nodes();
        &mut self.components[axis * m..(axis + 1) * m]
    }

    /// Euclidean magnitude at one node.
    #[inline]
    pub fn magnitude_at(&self, idx: usize) -> f64 {
        let m = self.grid.num_nodes();
        let mut s = 0.0;
        for a in 0..self.grid.dim() {
            let c = self.components[a * m + idx];
            s += c * c;
        }
        s.sqrt()
    }

    /// `|v|` as a scalar field.
    pub fn magnitude(&self) -> ScalarField {
        let values = (0..self.grid.num_nodes())
            .map(|idx| self.magnitude_at(idx))
            .collect();
        ScalarField {
            grid: self.grid,
            values,
        }
    }

    /// Nodewise squared magnitude.
    pub fn magnitude_squared(&self) -> ScalarField {
        let values = (0..self.grid.num_nodes())
            .map(|idx| {
                let m = self.magnitude_at(idx);
                m * m
            })
            .collect();
        ScalarField {
            grid: self.grid,
            values,
        }
    }
}

/// Ordered nodal values on the boundary, aligned with
/// [`Grid::boundary_nodes`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    grid: Grid,
    values: Vec<f64>,
}

impl BoundaryTrace {
    pub fn constant(grid: Grid, value: f64) -> BoundaryTrace {
        BoundaryTrace {
            grid,
            values: vec![value; grid.num_boundary_nodes()],
        }
    }

    /// Samples `f` at every boundary node, in enumeration order.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64; 3]) -> f64) -> BoundaryTrace {
        let values = grid
            .boundary_nodes()
            .iter()
            .map(|&idx| f(&grid.node_coords(idx)))
            .collect();
        BoundaryTrace { grid, values }
    }

    /// Samples a function of arc length along the 2D perimeter (`s = j*h`).
    pub fn from_arc_length_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<BoundaryTrace> {
        if grid.dim() != 2 {
            return Err(Error::Operation(
                "arc-length parameterization only exists on the 2D perimeter".into(),
            ));
        }
        let h = grid.spacing();
        let values = (0..grid.num_boundary_nodes())
            .map(|j| f(j as f64 * h))
            .collect();
        Ok(BoundaryTrace { grid, values })
    }

    /// Restriction of a field to the boundary.
    pub fn restrict(field: &ScalarField) -> BoundaryTrace {
        let grid = field.grid();
        let values = grid
            .boundary_nodes()
            .iter()
            .map(|&idx| field.get(idx))
            .collect();
        BoundaryTrace { grid, values }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<BoundaryTrace> {
        if values.len() != grid.num_boundary_nodes() {
            return Err(Error::Parameter(format!(
                "trace length {} does not match boundary node count {}",
                values.len(),
                grid.num_boundary_nodes()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!(
                "non-finite trace value at position {pos}"
            )));
        }
        Ok(BoundaryTrace { grid, values })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn node_ids(&self) -> Vec<usize> {
        self.grid.boundary_nodes()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> BoundaryTrace {
        BoundaryTrace {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip(&self, other: &BoundaryTrace, f: impl Fn(f64, f64) -> f64) -> Result<BoundaryTrace> {
        same_grid(self.grid, other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(BoundaryTrace {
            grid: self.grid,
            values,
        })
    }
}

/// Checks that two objects live on the same grid.
pub fn same_grid(a: Grid, b: Grid) -> Result<()> {
    if a.dim() != b.dim() || a.n() != b.n() {
        return Err(Error::Parameter(format!(
            "grid mismatch: {}x{}^{} vs {}x{}^{}",
            a.n(),
            a.n(),
            a.dim(),
            b.n(),
            b.n(),
            b.dim()
        )));
    }
    Ok(())
}
