//! Finite-difference assembly and solution of the divergence-form problems
//! `-div(D∇u) + σu = f` with Dirichlet data.
//!
//! The discretization is the standard flux form on the tensor grid: a
//! `2·dim+1`-point stencil whose face diffusivities are harmonic (default) or
//! arithmetic means of the adjacent nodal values. Harmonic means keep the
//! matrix an M-matrix across coefficient jumps, which is what the discrete
//! maximum principle rests on. Dirichlet data is imposed strongly: boundary
//! rows are eliminated and folded into the right-hand side, so the returned
//! solution matches the trace exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{same_grid, BoundaryTrace, Grid, ScalarField};

pub mod cg;

pub use cg::{conjugate_gradient, CgReport, LinearOperator};

/// How a face diffusivity is averaged from the two adjacent nodal values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FluxAverage {
    #[default]
    Harmonic,
    Arithmetic,
}

impl FluxAverage {
    #[inline]
    pub fn face_value(self, a: f64, b: f64) -> f64 {
        match self {
            FluxAverage::Harmonic => 2.0 * a * b / (a + b),
            FluxAverage::Arithmetic => 0.5 * (a + b),
        }
    }
}

/// Iterative-solver settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Relative residual target; must lie in (0, 1e-4].
    pub rel_tol: f64,
    /// Iteration cap; `None` means `20 · n^dim`.
    pub max_iter: Option<usize>,
    pub flux_average: FluxAverage,
    /// Switches Jacobi preconditioning on.
    pub jacobi: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rel_tol: 1e-10,
            max_iter: None,
            flux_average: FluxAverage::Harmonic,
            jacobi: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-4) {
            return Err(Error::Parameter(format!(
                "rel_tol must lie in (0, 1e-4], got {}",
                self.rel_tol
            )));
        }
        if self.max_iter == Some(0) {
            return Err(Error::Parameter("max_iter must be at least 1".into()));
        }
        Ok(())
    }

    pub fn effective_max_iter(&self, grid: Grid) -> usize {
        self.max_iter.unwrap_or(20 * grid.num_nodes())
    }
}

/// A Dirichlet problem `-div(D∇u) + σu = f`, `u = g` on the boundary.
#[derive(Debug, Clone)]
pub struct EllipticProblem {
    pub diffusion: ScalarField,
    pub reaction: ScalarField,
    pub source: ScalarField,
    pub dirichlet: BoundaryTrace,
}

impl EllipticProblem {
    pub fn new(
        diffusion: ScalarField,
        reaction: ScalarField,
        source: ScalarField,
        dirichlet: BoundaryTrace,
    ) -> Result<EllipticProblem> {
        same_grid(diffusion.grid(), reaction.grid())?;
        same_grid(diffusion.grid(), source.grid())?;
        same_grid(diffusion.grid(), dirichlet.grid())?;
        let p = EllipticProblem {
            diffusion,
            reaction,
            source,
            dirichlet,
        };
        p.validate()?;
        Ok(p)
    }

    /// `-div(D∇u) + σu = 0` with no source.
    pub fn without_source(
        diffusion: ScalarField,
        reaction: ScalarField,
        dirichlet: BoundaryTrace,
    ) -> Result<EllipticProblem> {
        let source = ScalarField::constant(diffusion.grid(), 0.0);
        EllipticProblem::new(diffusion, reaction, source, dirichlet)
    }

    pub fn grid(&self) -> Grid {
        self.diffusion.grid()
    }

    pub fn validate(&self) -> Result<()> {
        let dmin = self.diffusion.min_value();
        if dmin <= 0.0 {
            return Err(Error::Coefficient(format!(
                "diffusion must be strictly positive, min value {dmin}"
            )));
        }
        let rmin = self.reaction.min_value();
        if rmin < 0.0 {
            return Err(Error::Coefficient(format!(
                "reaction must be nonnegative, min value {rmin}"
            )));
        }
        Ok(())
    }
}

/// Assembled interior operator plus folded right-hand side.
///
/// Interior nodes are numbered compactly; each row stores its diagonal and up
/// to `2·dim` off-diagonal entries toward interior neighbors. Boundary
/// neighbors are eliminated into `rhs`.
pub struct AssembledSystem {
    grid: Grid,
    /// Interior position -> grid node index.
    interior: Vec<u32>,
    /// Grid node index -> interior position (`u32::MAX` for boundary nodes).
    interior_of: Vec<u32>,
    diag: Vec<f64>,
    nb_pos: Vec<u32>,
    nb_coef: Vec<f64>,
    stride: usize,
    rhs: Vec<f64>,
}

impl AssembledSystem {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn num_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn interior_nodes(&self) -> &[u32] {
        &self.interior
    }

    pub fn interior_position(&self, node: usize) -> Option<usize> {
        let p = self.interior_of[node];
        (p != u32::MAX).then_some(p as usize)
    }
}

impl LinearOperator for AssembledSystem {
    fn size(&self) -> usize {
        self.interior.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let s = self.stride;
        for i in 0..self.interior.len() {
            let mut acc = self.diag[i] * x[i];
            for k in 0..s {
                let j = self.nb_pos[i * s + k];
                if j != u32::MAX {
                    acc += self.nb_coef[i * s + k] * x[j as usize];
                }
            }
            y[i] = acc;
        }
    }
}

/// Assembles the interior stencil operator and right-hand side.
pub fn assemble(p: &EllipticProblem, flux: FluxAverage) -> Result<AssembledSystem> {
    p.validate()?;
    let grid = p.grid();
    let n = grid.n();
    let dim = grid.dim();
    let h = grid.spacing();
    let inv_h2 = 1.0 / (h * h);
    let num_nodes = grid.num_nodes();
    let strides = [1usize, n, n * n];

    let mut interior = Vec::with_capacity(num_nodes - grid.num_boundary_nodes());
    let mut interior_of = vec![u32::MAX; num_nodes];
    for idx in 0..num_nodes {
        if !grid.is_boundary(idx) {
            interior_of[idx] = interior.len() as u32;
            interior.push(idx as u32);
        }
    }

    // boundary values by grid index for rhs folding
    let mut bdry = vec![0.0f64; num_nodes];
    for (k, &idx) in grid.boundary_nodes().iter().enumerate() {
        bdry[idx] = p.dirichlet.values()[k];
    }

    let m = interior.len();
    let stride = 2 * dim;
    let mut diag = vec![0.0f64; m];
    let mut nb_pos = vec![u32::MAX; m * stride];
    let mut nb_coef = vec![0.0f64; m * stride];
    let mut rhs = vec![0.0f64; m];

    let d = p.diffusion.values();
    for (i, &node) in interior.iter().enumerate() {
        let node = node as usize;
        rhs[i] = p.source.get(node);
        let mut acc = p.reaction.get(node);
        let mut slot = 0;
        for axis in 0..dim {
            for dir in [-1isize, 1] {
                let nb = (node as isize + dir * strides[axis] as isize) as usize;
                let face = flux.face_value(d[node], d[nb]) * inv_h2;
                acc += face;
                let jp = interior_of[nb];
                if jp == u32::MAX {
                    rhs[i] += face * bdry[nb];
                } else {
                    nb_pos[i * stride + slot] = jp;
                    nb_coef[i * stride + slot] = -face;
                    slot += 1;
                }
            }
        }
        diag[i] = acc;
    }

    Ok(AssembledSystem {
        grid,
        interior,
        interior_of,
        diag,
        nb_pos,
        nb_coef,
        stride,
        rhs,
    })
}

/// Solver statistics, printable as JSON.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Solves the problem; the returned field equals the Dirichlet data on
/// boundary nodes exactly.
pub fn solve(p: &EllipticProblem, cfg: &SolverConfig) -> Result<ScalarField> {
    solve_with_stats(p, cfg).map(|(u, _)| u)
}

pub fn solve_with_stats(
    p: &EllipticProblem,
    cfg: &SolverConfig,
) -> Result<(ScalarField, SolveStats)> {
    cfg.validate()?;
    let grid = p.grid();
    let sys = assemble(p, cfg.flux_average)?;
    let max_iter = cfg.effective_max_iter(grid);
    let diag = cfg.jacobi.then(|| sys.diagonal().to_vec());
    let (x, rep) = conjugate_gradient(&sys, sys.rhs(), cfg.rel_tol, max_iter, diag.as_deref());
    let stats = SolveStats {
        iterations: rep.iterations,
        relative_residual: rep.relative_residual,
        converged: rep.converged,
    };
    if !rep.converged {
        return Err(Error::Solver {
            message: "conjugate gradients did not reach the residual target".into(),
            residual: rep.relative_residual,
            iterations: rep.iterations,
        });
    }

    let mut values = vec![0.0f64; grid.num_nodes()];
    for (k, &idx) in grid.boundary_nodes().iter().enumerate() {
        values[idx] = p.dirichlet.values()[k];
    }
    for (i, &node) in sys.interior_nodes().iter().enumerate() {
        values[node as usize] = x[i];
    }
    Ok((ScalarField::from_values(grid, values)?, stats))
}

/// Relative discrete residual of `u` against the problem, with harmonic face
/// averages (the solver default).
pub fn residual(p: &EllipticProblem, u: &ScalarField) -> Result<f64> {
    residual_with(p, u, FluxAverage::Harmonic)
}

/// Relative discrete residual: the h-weighted L² norm of `A u - rhs` over
/// interior nodes, normalized by the norm of the flux-plus-reaction term
/// `A u` itself. Zero right-hand side and zero flux returns 0.
pub fn residual_with(p: &EllipticProblem, u: &ScalarField, flux: FluxAverage) -> Result<f64> {
    let (r, op_u) = residual_parts(p, u, flux)?;
    let grid = p.grid();
    let mut num_sq = 0.0;
    let mut den_sq = 0.0;
    for node in 0..grid.num_nodes() {
        let w = grid.interior_weight(node);
        num_sq += w * r.get(node) * r.get(node);
        den_sq += w * op_u.get(node) * op_u.get(node);
    }
    let num = num_sq.sqrt();
    let den = den_sq.sqrt();
    if den == 0.0 {
        return Ok(num);
    }
    Ok(num / den)
}

/// Nodewise residual `A u - rhs` and operator value `A u` at interior nodes
/// (zero on boundary nodes), where `A u` is the flux-plus-reaction term
/// evaluated from the full field and `rhs` folds source and Dirichlet data.
pub fn residual_parts(
    p: &EllipticProblem,
    u: &ScalarField,
    flux: FluxAverage,
) -> Result<(ScalarField, ScalarField)> {
    same_grid(p.grid(), u.grid())?;
    p.validate()?;
    let grid = p.grid();
    let n = grid.n();
    let dim = grid.dim();
    let h = grid.spacing();
    let inv_h2 = 1.0 / (h * h);
    let strides = [1usize, n, n * n];

    // Dirichlet data by grid index
    let mut g = vec![0.0f64; grid.num_nodes()];
    for (k, &idx) in grid.boundary_nodes().iter().enumerate() {
        g[idx] = p.dirichlet.values()[k];
    }

    let d = p.diffusion.values();
    let uv = u.values();
    let mut r_out = vec![0.0f64; grid.num_nodes()];
    let mut op_out = vec![0.0f64; grid.num_nodes()];
    for node in 0..grid.num_nodes() {
        if grid.is_boundary(node) {
            continue;
        }
        let mut op_u = p.reaction.get(node) * uv[node];
        let mut rhs = p.source.get(node);
        for axis in 0..dim {
            for dir in [-1isize, 1] {
                let nb = (node as isize + dir * strides[axis] as isize) as usize;
                let face = flux.face_value(d[node], d[nb]) * inv_h2;
                if grid.is_boundary(nb) {
                    // strong Dirichlet: the eliminated neighbor contributes
                    // its datum to the rhs and its diagonal share to A u
                    op_u += face * uv[node];
                    rhs += face * g[nb];
                } else {
                    op_u += face * (uv[node] - uv[nb]);
                }
            }
        }
        r_out[node] = op_u - rhs;
        op_out[node] = op_u;
    }
    Ok((
        ScalarField::from_values(grid, r_out)?,
        ScalarField::from_values(grid, op_out)?,
    ))
}
