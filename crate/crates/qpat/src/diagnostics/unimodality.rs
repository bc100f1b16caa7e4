//! Certification that a boundary trace is quantitatively unimodal: its max
//! and min sets are single connected components and the tangential gradient
//! clears a caller-supplied modulus away from them.

use serde::{Deserialize, Serialize};

use crate::grid::{tangential_gradient, BoundaryTrace, Grid};

/// One entry of the `ω(δ)` verification profile.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OmegaSample {
    pub delta: f64,
    /// Caller's required floor `ω(δ)`.
    pub floor: f64,
    /// Measured `min |∇_T g|` over nodes at boundary distance ≥ δ from the
    /// extreme sets; `None` when no node is that far away.
    pub min_grad: Option<f64>,
}

/// Outcome of the unimodality check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnimodalityReport {
    /// Attained minimum and maximum of the trace.
    pub m: f64,
    pub max: f64,
    /// Grid node ids of the near-min and near-max sets.
    pub gamma_m: Vec<usize>,
    pub gamma_max: Vec<usize>,
    pub components_m: usize,
    pub components_max: usize,
    /// True when the min and max sets overlap (e.g. a constant trace).
    pub degenerate: bool,
    pub omega_profile: Vec<OmegaSample>,
    pub pass: bool,
}

/// Default membership tolerance for the extreme sets: `10·h·max|∇_T g|`.
/// Exact attainment sets are measure-zero on a grid, so membership needs a
/// level band scaled to how fast the trace moves per node step.
pub fn default_level_tol(g: &BoundaryTrace) -> f64 {
    let grad = tangential_gradient(g);
    let sup = grad.values().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    10.0 * g.grid().spacing() * sup
}

/// Adjacency lists of the boundary node graph, in trace-position indexing.
/// 2D: the perimeter cycle. 3D: grid-step adjacency restricted to boundary
/// nodes, which is exactly the cube-surface graph.
fn boundary_adjacency(grid: Grid) -> Vec<Vec<u32>> {
    let ids = grid.boundary_nodes();
    let m = ids.len();
    if grid.dim() == 2 {
        (0..m)
            .map(|j| vec![((j + m - 1) % m) as u32, ((j + 1) % m) as u32])
            .collect()
    } else {
        let n = grid.n();
        let strides = [1usize, n, n * n];
        let mut pos = vec![u32::MAX; grid.num_nodes()];
        for (k, &idx) in ids.iter().enumerate() {
            pos[idx] = k as u32;
        }
        ids.iter()
            .map(|&idx| {
                let ijk = grid.node_ijk(idx);
                let mut nbs = Vec::new();
                for axis in 0..3 {
                    if ijk[axis] > 0 {
                        let p = pos[idx - strides[axis]];
                        if p != u32::MAX {
                            nbs.push(p);
                        }
                    }
                    if ijk[axis] + 1 < n {
                        let p = pos[idx + strides[axis]];
                        if p != u32::MAX {
                            nbs.push(p);
                        }
                    }
                }
                nbs
            })
            .collect()
    }
}

/// Number of connected components of a node subset of the boundary graph.
fn component_count(adjacency: &[Vec<u32>], members: &[bool]) -> usize {
    let m = members.len();
    let mut seen = vec![false; m];
    let mut components = 0;
    let mut queue = Vec::new();
    for start in 0..m {
        if !members[start] || seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        queue.push(start);
        while let Some(v) = queue.pop() {
            for &w in &adjacency[v] {
                let w = w as usize;
                if members[w] && !seen[w] {
                    seen[w] = true;
                    queue.push(w);
                }
            }
        }
    }
    components
}

/// Multi-source BFS distance (in steps × h) from a source set.
fn bfs_distance(adjacency: &[Vec<u32>], sources: &[bool], h: f64) -> Vec<f64> {
    let m = sources.len();
    let mut dist = vec![f64::INFINITY; m];
    let mut queue = std::collections::VecDeque::new();
    for v in 0..m {
        if sources[v] {
            dist[v] = 0.0;
            queue.push_back(v);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &w in &adjacency[v] {
            let w = w as usize;
            if dist[w].is_infinite() {
                dist[w] = dist[v] + h;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Checks quantitative unimodality of a boundary trace.
///
/// `omega` lists `(δ, ω(δ))` pairs; the report records the measured
/// `min |∇_T g|` at each distance and passes only if every measured value
/// clears its floor, both extreme sets are non-empty single components, and
/// the sets do not overlap. Failures are report outcomes, not errors.
pub fn unimodality_check(
    g: &BoundaryTrace,
    level_tol: f64,
    omega: &[(f64, f64)],
) -> UnimodalityReport {
    let grid = g.grid();
    let h = grid.spacing();
    let ids = grid.boundary_nodes();
    let values = g.values();
    let m_val = g.min_value();
    let max_val = g.max_value();

    let in_min: Vec<bool> = values.iter().map(|&v| v <= m_val + level_tol).collect();
    let in_max: Vec<bool> = values.iter().map(|&v| v >= max_val - level_tol).collect();
    let degenerate = in_min.iter().zip(&in_max).any(|(&a, &b)| a && b);

    let adjacency = boundary_adjacency(grid);
    let components_m = component_count(&adjacency, &in_min);
    let components_max = component_count(&adjacency, &in_max);

    let sources: Vec<bool> = in_min.iter().zip(&in_max).map(|(&a, &b)| a || b).collect();
    let dist = bfs_distance(&adjacency, &sources, h);
    let grad = tangential_gradient(g);
    let grad_abs: Vec<f64> = grad.values().iter().map(|v| v.abs()).collect();

    let omega_profile: Vec<OmegaSample> = omega
        .iter()
        .map(|&(delta, floor)| {
            let min_grad = dist
                .iter()
                .zip(&grad_abs)
                .filter(|(&d, _)| d.is_finite() && d >= delta && d > 0.0)
                .map(|(_, &v)| v)
                .fold(None, |acc: Option<f64>, v| {
                    Some(acc.map_or(v, |a| a.min(v)))
                });
            OmegaSample {
                delta,
                floor,
                min_grad,
            }
        })
        .collect();

    let profile_ok = omega_profile
        .iter()
        .all(|s| s.min_grad.is_none_or(|v| v >= s.floor));
    let non_empty = in_min.iter().any(|&b| b) && in_max.iter().any(|&b| b);
    let pass = components_m == 1 && components_max == 1 && non_empty && !degenerate && profile_ok;

    let collect = |members: &[bool]| {
        members
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(k, _)| ids[k])
            .collect()
    };

    UnimodalityReport {
        m: m_val,
        max: max_val,
        gamma_m: collect(&in_min),
        gamma_max: collect(&in_max),
        components_m,
        components_max,
        degenerate,
        omega_profile,
        pass,
    }
}
