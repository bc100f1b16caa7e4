//! Discrete differential operators: nodal gradients, ball integrals, and
//! tangential derivatives of boundary traces.

use crate::error::{Error, Result};
use crate::grid::{BoundaryTrace, Grid, ScalarField, VectorField};

/// Nodal gradient: central differences at interior nodes, second-order
/// one-sided stencils on the boundary. Exact on affine fields.
pub fn gradient(f: &ScalarField) -> VectorField {
    let grid = f.grid();
    let n = grid.n();
    let h = grid.spacing();
    let v = f.values();
    let mut out = VectorField::zeros(grid);

    let strides = [1usize, n, n * n];
    for axis in 0..grid.dim() {
        let stride = strides[axis];
        let comp = out.component_mut(axis);
        for idx in 0..grid.num_nodes() {
            let i = grid.node_ijk(idx)[axis];
            comp[idx] = if i == 0 {
                (-3.0 * v[idx] + 4.0 * v[idx + stride] - v[idx + 2 * stride]) / (2.0 * h)
            } else if i == n - 1 {
                (3.0 * v[idx] - 4.0 * v[idx - stride] + v[idx - 2 * stride]) / (2.0 * h)
            } else {
                (v[idx + stride] - v[idx - stride]) / (2.0 * h)
            };
        }
    }
    out
}

/// Nodal Laplacian: central second differences at interior nodes, 4-point
/// one-sided stencils on the boundary (both second order; exact on cubics).
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    let n = grid.n();
    let h2 = grid.spacing() * grid.spacing();
    let v = f.values();
    let strides = [1usize, n, n * n];
    let mut out = vec![0.0f64; grid.num_nodes()];
    for (idx, slot) in out.iter_mut().enumerate() {
        let ijk = grid.node_ijk(idx);
        let mut acc = 0.0;
        for axis in 0..grid.dim() {
            let s = strides[axis];
            let i = ijk[axis];
            acc += if i == 0 {
                (2.0 * v[idx] - 5.0 * v[idx + s] + 4.0 * v[idx + 2 * s] - v[idx + 3 * s]) / h2
            } else if i == n - 1 {
                (2.0 * v[idx] - 5.0 * v[idx - s] + 4.0 * v[idx - 2 * s] - v[idx - 3 * s]) / h2
            } else {
                (v[idx + s] - 2.0 * v[idx] + v[idx - s]) / h2
            };
        }
        *slot = acc;
    }
    ScalarField::from_values(grid, out).expect("laplacian of a finite field is finite")
}

/// Quadrature sum of `f` over the nodes inside the ball `B_r(x0)`, each with
/// weight `h^dim`. The ball must be contained in the domain.
pub fn ball_integral(f: &ScalarField, x0: &[f64], r: f64) -> Result<f64> {
    let grid = f.grid();
    let dim = grid.dim();
    if x0.len() != dim {
        return Err(Error::Parameter(format!(
            "center has {} coordinates on a {}D grid",
            x0.len(),
            dim
        )));
    }
    if r <= 0.0 {
        return Err(Error::Parameter(format!(
            "radius must be positive, got {r}"
        )));
    }
    let dist_to_boundary = (0..dim)
        .map(|a| x0[a].min(1.0 - x0[a]))
        .fold(f64::INFINITY, f64::min);
    if r > dist_to_boundary {
        return Err(Error::Geometry(format!(
            "ball of radius {r} around {x0:?} escapes the domain (distance to boundary {dist_to_boundary})"
        )));
    }

    let n = grid.n();
    let h = grid.spacing();
    let w = h.powi(dim as i32);
    let r_sq = r * r;

    // per-axis index window covering the ball
    let lo_hi: Vec<(usize, usize)> = (0..dim)
        .map(|a| {
            let lo = ((x0[a] - r) / h).ceil().max(0.0) as usize;
            let hi = (((x0[a] + r) / h).floor() as usize).min(n - 1);
            (lo, hi)
        })
        .collect();

    let mut acc = 0.0;
    let mut visit = |ijk: [usize; 3]| {
        let idx = grid.node_index(ijk);
        let x = grid.node_coords(idx);
        let mut d_sq = 0.0;
        for a in 0..dim {
            let d = x[a] - x0[a];
            d_sq += d * d;
        }
        if d_sq <= r_sq {
            acc += w * f.get(idx);
        }
    };
    if dim == 2 {
        for iy in lo_hi[1].0..=lo_hi[1].1 {
            for ix in lo_hi[0].0..=lo_hi[0].1 {
                visit([ix, iy, 0]);
            }
        }
    } else {
        for iz in lo_hi[2].0..=lo_hi[2].1 {
            for iy in lo_hi[1].0..=lo_hi[1].1 {
                for ix in lo_hi[0].0..=lo_hi[0].1 {
                    visit([ix, iy, iz]);
                }
            }
        }
    }
    Ok(acc)
}

/// Tangential derivative of a boundary trace.
///
/// 2D: signed periodic central difference in arc length. 3D: per-face 2D
/// central differences (one-sided at face edges); the returned trace holds
/// the magnitude `|∇_T t|`, taking the largest per-face value at nodes shared
/// by several faces.
pub fn tangential_gradient(t: &BoundaryTrace) -> BoundaryTrace {
    let grid = t.grid();
    if grid.dim() == 2 {
        let m = t.len();
        let h = grid.spacing();
        let v = t.values();
        let values: Vec<f64> = (0..m)
            .map(|j| (v[(j + 1) % m] - v[(j + m - 1) % m]) / (2.0 * h))
            .collect();
        BoundaryTrace::from_values(grid, values).expect("derivative of a finite trace is finite")
    } else {
        tangential_gradient_cube(t)
    }
}

fn tangential_gradient_cube(t: &BoundaryTrace) -> BoundaryTrace {
    let grid = t.grid();
    let n = grid.n();
    let h = grid.spacing();
    let ids = grid.boundary_nodes();

    // node index -> position in the trace ordering
    let mut pos = vec![usize::MAX; grid.num_nodes()];
    for (k, &idx) in ids.iter().enumerate() {
        pos[idx] = k;
    }

    let one_sided = |v0: f64, v1: f64, v2: f64| (-3.0 * v0 + 4.0 * v1 - v2) / (2.0 * h);

    let mut out = vec![0.0f64; ids.len()];
    for (axis, side) in Grid::face_list() {
        let fixed = if side == 0 { 0 } else { n - 1 };
        let (a, b) = Grid::face_axes(axis);
        // face values as an n×n patch
        let mut patch = vec![0.0f64; n * n];
        let mut patch_pos = vec![0usize; n * n];
        for ia in 0..n {
            for ib in 0..n {
                let mut ijk = [0usize; 3];
                ijk[axis] = fixed;
                ijk[a] = ia;
                ijk[b] = ib;
                let p = pos[grid.node_index(ijk)];
                patch[ia * n + ib] = t.values()[p];
                patch_pos[ia * n + ib] = p;
            }
        }
        let d = |i: usize, line: &dyn Fn(usize) -> f64| -> f64 {
            if i == 0 {
                one_sided(line(0), line(1), line(2))
            } else if i == n - 1 {
                -one_sided(line(n - 1), line(n - 2), line(n - 3))
            } else {
                (line(i + 1) - line(i - 1)) / (2.0 * h)
            }
        };
        for ia in 0..n {
            for ib in 0..n {
                let da = d(ia, &|i| patch[i * n + ib]);
                let db = d(ib, &|i| patch[ia * n + i]);
                let mag = (da * da + db * db).sqrt();
                let p = patch_pos[ia * n + ib];
                if mag > out[p] {
                    out[p] = mag;
                }
            }
        }
    }
    BoundaryTrace::from_values(grid, out).expect("derivative of a finite trace is finite")
}
