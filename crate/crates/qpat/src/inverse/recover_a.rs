//! Variational recovery of the effective coefficient `a` from the ratio
//! field `U`.
//!
//! The recovered field minimizes
//!
//! ```text
//! J(a) = ‖div(a∇U)‖²_{L²}  +  reg_alpha · ‖∇U‖²_{L²} · ‖∇a‖²_{L²}
//! ```
//!
//! over nodal fields with `a = a_bdry` on the boundary. The data term is
//! discretized at cell centers in the transport form
//! `∇a·∇U + a·ΔU`, with cell-corner differences for `∇a` and `∇U` and the
//! averaged nodal Laplacian for `ΔU`. Corner differences couple adjacent
//! nodes directly, so the operator has no checkerboard null modes along
//! streamlines of `U` (nodal central differences of `a` do, and their
//! least-squares minimizer is wrong for affine `U`). Scaling the smoothness
//! term by `‖∇U‖²` makes the minimizer invariant under rescaling of `U`,
//! since both terms then scale quadratically.
//!
//! The normal equations are solved by conjugate gradients in factored (CGLS)
//! form: only products with the stacked residual operator and its transpose
//! are formed, which keeps the conditioning at that of the operator rather
//! than its square.
//!
//! A transport method along `∇U` would be simpler where `|∇U|` is bounded
//! away from zero, but in dimension 3 no boundary data guarantees that; the
//! least-squares form tolerates degenerate gradients and reports them in the
//! diagnostics instead.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::norms::interior_l2_norm;
use crate::grid::{gradient, laplacian, same_grid, BoundaryTrace, ScalarField};
use crate::inverse::ReconstructionConfig;

/// Outcome of the variational solve.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RecoverAStats {
    pub iterations: usize,
    /// Relative norm of the normal-equation gradient at exit.
    pub gradient_norm: f64,
    pub converged: bool,
    /// Objective value at the minimizer and its two parts.
    pub objective: f64,
    pub data_term: f64,
    pub reg_term: f64,
    /// Nodes where the recovered field is not strictly positive; reported,
    /// never clamped.
    pub nonpositive_nodes: usize,
}

/// Stacked least-squares operator: one data row per grid cell, one
/// smoothness row per grid edge with an interior endpoint.
struct StackedLsq {
    num_interior: usize,
    interior: Vec<u32>,
    /// per data row: up to 2^dim corner couplings (interior position, coef)
    row_pos: Vec<u32>,
    row_coef: Vec<f64>,
    corners: usize,
    num_cells: usize,
    /// edges as (interior position or MAX, interior position or MAX)
    edges: Vec<(u32, u32)>,
    edge_weight: f64,
    /// negated constants: the CGLS right-hand side
    rhs: Vec<f64>,
}

impl StackedLsq {
    fn rows(&self) -> usize {
        self.num_cells + self.edges.len()
    }

    /// y = M x
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let c = self.corners;
        for cell in 0..self.num_cells {
            let mut acc = 0.0;
            for k in 0..c {
                let j = self.row_pos[cell * c + k];
                if j != u32::MAX {
                    acc += self.row_coef[cell * c + k] * x[j as usize];
                }
            }
            y[cell] = acc;
        }
        for (e, &(i, j)) in self.edges.iter().enumerate() {
            let xi = if i == u32::MAX { 0.0 } else { x[i as usize] };
            let xj = if j == u32::MAX { 0.0 } else { x[j as usize] };
            y[self.num_cells + e] = self.edge_weight * (xj - xi);
        }
    }

    /// x = Mᵀ y
    fn apply_transpose(&self, y: &[f64], x: &mut [f64]) {
        x.fill(0.0);
        let c = self.corners;
        for cell in 0..self.num_cells {
            let yc = y[cell];
            for k in 0..c {
                let j = self.row_pos[cell * c + k];
                if j != u32::MAX {
                    x[j as usize] += self.row_coef[cell * c + k] * yc;
                }
            }
        }
        for (e, &(i, j)) in self.edges.iter().enumerate() {
            let ye = self.edge_weight * y[self.num_cells + e];
            if i != u32::MAX {
                x[i as usize] -= ye;
            }
            if j != u32::MAX {
                x[j as usize] += ye;
            }
        }
    }
}

fn build_system(u: &ScalarField, a_bdry: &BoundaryTrace, reg_alpha: f64) -> Result<StackedLsq> {
    let grid = u.grid();
    same_grid(grid, a_bdry.grid())?;
    if a_bdry.min_value() <= 0.0 {
        return Err(Error::Parameter(format!(
            "boundary coefficient must be positive, min value {}",
            a_bdry.min_value()
        )));
    }
    if reg_alpha < 0.0 {
        return Err(Error::Parameter(format!(
            "regularization weight must be nonnegative, got {reg_alpha}"
        )));
    }

    let n = grid.n();
    let dim = grid.dim();
    let h = grid.spacing();
    let strides = [1usize, n, n * n];
    let num_nodes = grid.num_nodes();

    let grad_norm = interior_l2_norm(&gradient(u).magnitude());
    if grad_norm == 0.0 {
        return Err(Error::DegenerateInput(
            "ratio field is constant; its gradient carries no information about a".into(),
        ));
    }

    // weights making both objective terms discrete integrals
    let data_weight = h.powi(dim as i32).sqrt();
    let edge_weight = (reg_alpha * grad_norm * grad_norm * h.powi(dim as i32 - 2)).sqrt();

    let mut interior = Vec::with_capacity(num_nodes - grid.num_boundary_nodes());
    let mut interior_of = vec![u32::MAX; num_nodes];
    for idx in 0..num_nodes {
        if !grid.is_boundary(idx) {
            interior_of[idx] = interior.len() as u32;
            interior.push(idx as u32);
        }
    }

    // boundary values by grid index
    let mut bdry = vec![0.0f64; num_nodes];
    for (k, &idx) in grid.boundary_nodes().iter().enumerate() {
        bdry[idx] = a_bdry.values()[k];
    }

    let uv = u.values();
    let lap_u = laplacian(u);
    let corners = 1usize << dim;
    let cells_per_axis = n - 1;
    let num_cells = cells_per_axis.pow(dim as u32);
    let mut row_pos = vec![u32::MAX; num_cells * corners];
    let mut row_coef = vec![0.0f64; num_cells * corners];
    let mut rhs = vec![0.0f64; num_cells];

    // half the corner count, the denominator of corner-difference gradients
    let grad_div = (corners / 2) as f64 * h;
    let mut corner_idx = vec![0usize; corners];
    for cell in 0..num_cells {
        // cell origin node
        let mut rem = cell;
        let mut origin = 0usize;
        for axis in 0..dim {
            let ci = rem % cells_per_axis;
            rem /= cells_per_axis;
            origin += ci * strides[axis];
        }
        for (bits, slot) in corner_idx.iter_mut().enumerate() {
            let mut idx = origin;
            for axis in 0..dim {
                if bits & (1 << axis) != 0 {
                    idx += strides[axis];
                }
            }
            *slot = idx;
        }

        // cell-centered ∇U and mean ΔU from the corners
        let mut grad_u = [0.0f64; 3];
        let mut lap_mean = 0.0;
        for (bits, &idx) in corner_idx.iter().enumerate() {
            lap_mean += lap_u.get(idx);
            for axis in 0..dim {
                let sign = if bits & (1 << axis) != 0 { 1.0 } else { -1.0 };
                grad_u[axis] += sign * uv[idx];
            }
        }
        lap_mean /= corners as f64;
        for g in grad_u.iter_mut() {
            *g /= grad_div;
        }

        // t = ∇a·∇U + ā·ΔU, linear in the corner values of a
        let mut constant = 0.0;
        for (bits, &idx) in corner_idx.iter().enumerate() {
            let mut coef = lap_mean / corners as f64;
            for axis in 0..dim {
                let sign = if bits & (1 << axis) != 0 { 1.0 } else { -1.0 };
                coef += sign * grad_u[axis] / grad_div;
            }
            coef *= data_weight;
            let jp = interior_of[idx];
            if jp == u32::MAX {
                constant += coef * bdry[idx];
            } else {
                row_pos[cell * corners + bits] = jp;
                row_coef[cell * corners + bits] = coef;
            }
        }
        rhs[cell] = -constant;
    }

    // edges with at least one interior endpoint
    let mut edges = Vec::new();
    for node in 0..num_nodes {
        let ijk = grid.node_ijk(node);
        for axis in 0..dim {
            if ijk[axis] + 1 >= n {
                continue;
            }
            let nb = node + strides[axis];
            let pi = interior_of[node];
            let pj = interior_of[nb];
            if pi == u32::MAX && pj == u32::MAX {
                continue;
            }
            edges.push((pi, pj));
            // fixed endpoints move to the right-hand side
            let fixed = match (pi, pj) {
                (u32::MAX, _) => -bdry[node],
                (_, u32::MAX) => bdry[nb],
                _ => 0.0,
            };
            rhs.push(-edge_weight * fixed);
        }
    }

    Ok(StackedLsq {
        num_interior: interior.len(),
        interior,
        row_pos,
        row_coef,
        corners,
        num_cells,
        edges,
        edge_weight,
        rhs,
    })
}

/// Minimizes the regularized ratio-equation misfit over nodal fields that
/// match `a_bdry` on the boundary.
pub fn recover_a(
    u: &ScalarField,
    a_bdry: &BoundaryTrace,
    cfg: &ReconstructionConfig,
) -> Result<(ScalarField, RecoverAStats)> {
    cfg.validate()?;
    let grid = u.grid();
    let sys = build_system(u, a_bdry, cfg.reg_alpha)?;
    let m = sys.num_interior;
    let rows = sys.rows();
    let rel_tol = cfg.solver.rel_tol;
    let max_iter = cfg.solver.effective_max_iter(grid);

    // start from the constant extension of the boundary mean
    let mean = a_bdry.values().iter().sum::<f64>() / a_bdry.len() as f64;
    let mut x = vec![mean; m];

    // CGLS: conjugate gradients on the normal equations in factored form
    let mut r = vec![0.0f64; rows];
    let mut q = vec![0.0f64; rows];
    let mut s = vec![0.0f64; m];
    sys.apply(&x, &mut r);
    for (ri, &bi) in r.iter_mut().zip(&sys.rhs) {
        *ri = bi - *ri;
    }
    sys.apply_transpose(&r, &mut s);
    let mut p = s.clone();
    let mut gamma: f64 = s.iter().map(|v| v * v).sum();
    let s0_norm = gamma.sqrt();
    let tol = rel_tol * s0_norm;

    let mut iterations = 0;
    let mut converged = s0_norm == 0.0;
    let mut best_r_norm = f64::INFINITY;
    let mut stalled = 0usize;
    while !converged && iterations < max_iter {
        iterations += 1;
        sys.apply(&p, &mut q);
        let q_sq: f64 = q.iter().map(|v| v * v).sum();
        if q_sq == 0.0 || !q_sq.is_finite() {
            break;
        }
        let alpha = gamma / q_sq;
        for i in 0..m {
            x[i] += alpha * p[i];
        }
        for i in 0..rows {
            r[i] -= alpha * q[i];
        }
        sys.apply_transpose(&r, &mut s);
        let gamma_next: f64 = s.iter().map(|v| v * v).sum();
        if gamma_next.sqrt() <= tol {
            converged = true;
            break;
        }
        // stop once the residual reaches its numerical floor
        let r_norm: f64 = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r_norm < best_r_norm * (1.0 - 1e-12) {
            best_r_norm = r_norm;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= 50 {
                converged = true;
                break;
            }
        }
        let beta = gamma_next / gamma;
        gamma = gamma_next;
        for i in 0..m {
            p[i] = s[i] + beta * p[i];
        }
    }
    let gradient_norm = if s0_norm == 0.0 {
        0.0
    } else {
        gamma.sqrt() / s0_norm
    };
    if !converged {
        return Err(Error::Solver {
            message: "least-squares recovery of a did not converge".into(),
            residual: gradient_norm,
            iterations,
        });
    }

    // objective value at the minimizer
    sys.apply(&x, &mut q);
    let mut data_term = 0.0;
    let mut reg_term = 0.0;
    for i in 0..rows {
        let res = q[i] - sys.rhs[i];
        if i < sys.num_cells {
            data_term += res * res;
        } else {
            reg_term += res * res;
        }
    }

    // scatter: boundary values exact, interior from the solve
    let mut values = vec![0.0f64; grid.num_nodes()];
    for (k, &idx) in grid.boundary_nodes().iter().enumerate() {
        values[idx] = a_bdry.values()[k];
    }
    for (i, &node) in sys.interior.iter().enumerate() {
        values[node as usize] = x[i];
    }
    let a_hat = ScalarField::from_values(grid, values)?;
    let nonpositive = a_hat.values().iter().filter(|&&v| v <= 0.0).count();

    Ok((
        a_hat,
        RecoverAStats {
            iterations,
            gradient_norm,
            converged,
            objective: data_term + reg_term,
            data_term,
            reg_term,
            nonpositive_nodes: nonpositive,
        },
    ))
}
