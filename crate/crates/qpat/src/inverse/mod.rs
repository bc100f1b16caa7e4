//! The ratio-transform reconstruction pipeline.
//!
//! From the absorbed-energy pair `(H₁, H₂)` the ratio `U = H₂/H₁` solves
//! `div(a∇U) = 0` with effective coefficient `a = D u₁²` and boundary values
//! `g₂/g₁`. The pipeline recovers `a` variationally from `U` and the known
//! boundary values `a|∂Ω = D|∂Ω·g₁²`, then recovers `u₁` from
//! `-div(a∇(1/u₁)) = H₁` with `1/u₁ = 1/g₁` on the boundary, and closes with
//! the pointwise algebra `σ = H₁/u₁` and `D = a/u₁²`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::elliptic::{
    residual_with, solve_with_stats, EllipticProblem, FluxAverage, SolveStats, SolverConfig,
};
use crate::error::{Error, Result};
use crate::forward::{IlluminationPair, MeasurementSet};
use crate::grid::norms::boundary_linf_norm;
use crate::grid::{gradient, same_grid, BoundaryTrace, ScalarField};

mod recover_a;

pub use recover_a::{recover_a, RecoverAStats};

/// Settings of the reconstruction pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconstructionConfig {
    /// Tikhonov weight on `∇a` in the variational recovery.
    pub reg_alpha: f64,
    /// Threshold on `|∇U|` below which a node counts as gradient-degenerate
    /// (diagnostics only; the recovery itself does not need it).
    pub grad_floor: f64,
    /// Positivity floor for the divisions `H₂/H₁`, `H₁/u₁`, `a/u₁²`.
    pub positivity_floor: f64,
    /// Interior averaging passes applied to the ratio field before its
    /// gradients enter the recovery. Zero for exact data; noisy data needs
    /// denoising before differentiation, and each pass perturbs a smooth
    /// field only at O(h²), so a fixed pass count does not change the
    /// convergence order.
    pub ratio_smoothing: usize,
    pub solver: SolverConfig,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        ReconstructionConfig {
            reg_alpha: 1e-6,
            grad_floor: 1e-3,
            positivity_floor: 1e-8,
            ratio_smoothing: 0,
            solver: SolverConfig::default(),
        }
    }
}

/// One interior averaging pass per call: each interior node moves halfway
/// toward its neighbor mean; boundary values stay fixed.
pub fn smooth_interior(u: &ScalarField, passes: usize) -> ScalarField {
    let grid = u.grid();
    let n = grid.n();
    let dim = grid.dim();
    let strides = [1usize, n, n * n];
    let mut current = u.values().to_vec();
    let mut next = current.clone();
    for _ in 0..passes {
        for node in 0..grid.num_nodes() {
            if grid.is_boundary(node) {
                continue;
            }
            let mut acc = 0.0;
            for axis in 0..dim {
                acc += current[node - strides[axis]] + current[node + strides[axis]];
            }
            next[node] = 0.5 * current[node] + 0.5 * acc / (2.0 * dim as f64);
        }
        std::mem::swap(&mut current, &mut next);
    }
    ScalarField::from_values(grid, current).expect("averaging preserves finiteness")
}

impl ReconstructionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reg_alpha < 0.0 {
            return Err(Error::Parameter(format!(
                "reg_alpha must be nonnegative, got {}",
                self.reg_alpha
            )));
        }
        if self.grad_floor <= 0.0 {
            return Err(Error::Parameter(format!(
                "grad_floor must be positive, got {}",
                self.grad_floor
            )));
        }
        if self.positivity_floor <= 0.0 {
            return Err(Error::Parameter(format!(
                "positivity_floor must be positive, got {}",
                self.positivity_floor
            )));
        }
        self.solver.validate()
    }
}

/// The transformed problem data: ratio field and its boundary knowledge.
#[derive(Debug, Clone)]
pub struct RatioSystem {
    /// `U = H₂/H₁`.
    pub u: ScalarField,
    /// `a|∂Ω = D|∂Ω · g₁²`.
    pub a_boundary: BoundaryTrace,
    /// `g₂/g₁`, the Dirichlet data `U` satisfies up to data error.
    pub g_ratio_boundary: BoundaryTrace,
    /// Sup distance between the trace of `U` and `g₂/g₁` (zero on clean
    /// data, where the traces agree by construction).
    pub boundary_mismatch: f64,
}

/// Nodewise quotient `U = H₂/H₁`, guarded by a positivity floor on `H₁`.
pub fn ratio_field(h1: &ScalarField, h2: &ScalarField, floor: f64) -> Result<ScalarField> {
    same_grid(h1.grid(), h2.grid())?;
    if floor <= 0.0 {
        return Err(Error::Parameter(format!(
            "positivity floor must be positive, got {floor}"
        )));
    }
    if let Some(node) = h1.values().iter().position(|&v| v < floor) {
        let x = h1.grid().node_coords(node);
        return Err(Error::Degeneracy(format!(
            "H1 falls below the floor {floor} at node {node} (x = {:.4}, y = {:.4}, z = {:.4}): \
             value {}",
            x[0],
            x[1],
            x[2],
            h1.get(node)
        )));
    }
    h2.zip(h1, |a, b| a / b)
}

/// Boundary values of the effective coefficient: `a = D·g₁²` on `∂Ω`.
pub fn boundary_a(d_boundary: &BoundaryTrace, g1: &BoundaryTrace) -> Result<BoundaryTrace> {
    let g_min = g1.min_value();
    if g_min <= 0.0 {
        return Err(Error::Parameter(format!(
            "illumination must be positive on the boundary, min value {g_min}"
        )));
    }
    d_boundary.zip(g1, |d, g| d * g * g)
}

/// Assembles the ratio system from measurements and boundary knowledge.
pub fn ratio_system(
    m: &MeasurementSet,
    illum: &IlluminationPair,
    d_boundary: &BoundaryTrace,
    floor: f64,
) -> Result<RatioSystem> {
    let u = ratio_field(&m.h1, &m.h2, floor)?;
    let u_min = u.min_value();
    if u_min <= 0.0 {
        return Err(Error::Degeneracy(format!(
            "ratio field lost positivity (min {u_min}): H2 is not positive everywhere"
        )));
    }
    let a_boundary = boundary_a(d_boundary, &illum.g1)?;
    let g_ratio_boundary = illum.ratio.clone();
    let mismatch =
        boundary_linf_norm(&BoundaryTrace::restrict(&u).zip(&g_ratio_boundary, |a, b| a - b)?);
    Ok(RatioSystem {
        u,
        a_boundary,
        g_ratio_boundary,
        boundary_mismatch: mismatch,
    })
}

/// Recovers `u₁` by solving `-div(a∇w) = H₁`, `w = 1/g₁` on the boundary,
/// and inverting `w`.
pub fn recover_u1(
    a_hat: &ScalarField,
    h1: &ScalarField,
    g1: &BoundaryTrace,
    cfg: &SolverConfig,
) -> Result<ScalarField> {
    recover_u1_with_stats(a_hat, h1, g1, cfg).map(|(u, _)| u)
}

pub fn recover_u1_with_stats(
    a_hat: &ScalarField,
    h1: &ScalarField,
    g1: &BoundaryTrace,
    cfg: &SolverConfig,
) -> Result<(ScalarField, SolveStats)> {
    let g_min = g1.min_value();
    if g_min <= 0.0 {
        return Err(Error::Parameter(format!(
            "illumination must be positive, min value {g_min}"
        )));
    }
    let grid = a_hat.grid();
    let problem = EllipticProblem::new(
        a_hat.clone(),
        ScalarField::constant(grid, 0.0),
        h1.clone(),
        g1.map(|g| 1.0 / g),
    )?;
    let (w, stats) = solve_with_stats(&problem, cfg)?;
    let w_min = w.min_value();
    if w_min <= 0.0 {
        return Err(Error::Degeneracy(format!(
            "reciprocal density lost positivity (min {w_min}); the reconstruction is inconsistent"
        )));
    }
    Ok((w.map(|v| 1.0 / v), stats))
}

/// `σ = H₁/u₁`, guarded by a floor on `u₁`.
pub fn recover_sigma(h1: &ScalarField, u1_hat: &ScalarField, floor: f64) -> Result<ScalarField> {
    if floor <= 0.0 {
        return Err(Error::Parameter(format!(
            "positivity floor must be positive, got {floor}"
        )));
    }
    let min = u1_hat.min_value();
    if min < floor {
        return Err(Error::Degeneracy(format!(
            "recovered density falls below the floor {floor}: min value {min}"
        )));
    }
    h1.zip(u1_hat, |h, u| h / u)
}

/// `D = a/u₁²`, guarded by a floor on `u₁`.
pub fn recover_d(a_hat: &ScalarField, u1_hat: &ScalarField, floor: f64) -> Result<ScalarField> {
    if floor <= 0.0 {
        return Err(Error::Parameter(format!(
            "positivity floor must be positive, got {floor}"
        )));
    }
    let min = u1_hat.min_value();
    if min < floor {
        return Err(Error::Degeneracy(format!(
            "recovered density falls below the floor {floor}: min value {min}"
        )));
    }
    a_hat.zip(u1_hat, |a, u| a / (u * u))
}

/// Gradient-degeneracy and consistency diagnostics of a reconstruction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReconstructionDiagnostics {
    /// Smallest `|∇U|` over all nodes.
    pub min_grad_u: f64,
    /// Fraction of nodes with `|∇U|` below the configured floor.
    pub degenerate_fraction: f64,
    /// Relative residual of `div(â∇U) = 0` with the trace of `U` as data.
    pub ratio_residual: f64,
    /// Same residual restricted to nodes where `|∇U| ≥ grad_floor`
    /// (the region where transport along `∇U` would have been viable).
    pub ratio_residual_nondegenerate: f64,
    /// Variational objective value at the minimizer and its parts.
    pub objective: f64,
    pub data_term: f64,
    pub reg_term: f64,
    /// Non-positive nodes in `â` (reported, never clamped).
    pub nonpositive_a_nodes: usize,
    pub a_min: f64,
    /// Sup distance between the trace of `U` and `g₂/g₁`.
    pub boundary_mismatch: f64,
}

/// Per-stage solver statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReconstructionStats {
    pub recover_a: RecoverAStats,
    pub recover_u1: SolveStats,
    pub wall_seconds: f64,
}

/// The recovered fields with diagnostics.
#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub a_hat: ScalarField,
    pub u1_hat: ScalarField,
    pub d_hat: ScalarField,
    pub sigma_hat: ScalarField,
    pub diagnostics: ReconstructionDiagnostics,
    pub stats: ReconstructionStats,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage: name,
        source: Box::new(e),
    })
}

/// Runs the full pipeline: ratio transform, effective-coefficient recovery,
/// density recovery, and the closing algebra. The first failing stage aborts
/// with a stage-tagged error.
pub fn reconstruct(
    m: &MeasurementSet,
    illum: &IlluminationPair,
    d_boundary: &BoundaryTrace,
    cfg: &ReconstructionConfig,
) -> Result<ReconstructionResult> {
    cfg.validate()?;
    let start = Instant::now();

    let system = stage(
        "ratio_field",
        ratio_system(m, illum, d_boundary, cfg.positivity_floor),
    )?;
    // the illuminations are prescribed, so the trace g₂/g₁ is exact data:
    // pin it before differentiating (the measured mismatch stays recorded)
    let mut u_work = system.u.clone();
    {
        let grid = u_work.grid();
        let ids = grid.boundary_nodes();
        let values = u_work.values_mut();
        for (k, &idx) in ids.iter().enumerate() {
            values[idx] = system.g_ratio_boundary.values()[k];
        }
    }
    if cfg.ratio_smoothing > 0 {
        u_work = smooth_interior(&u_work, cfg.ratio_smoothing);
    }
    let (a_hat, a_stats) = stage("recover_a", recover_a(&u_work, &system.a_boundary, cfg))?;
    let (u1_hat, u1_stats) = stage(
        "recover_u1",
        recover_u1_with_stats(&a_hat, &m.h1, &illum.g1, &cfg.solver),
    )?;
    let sigma_hat = stage(
        "recover_sigma",
        recover_sigma(&m.h1, &u1_hat, cfg.positivity_floor),
    )?;
    let d_hat = stage(
        "recover_d",
        recover_d(&a_hat, &u1_hat, cfg.positivity_floor),
    )?;

    // gradient-degeneracy diagnostics on the (possibly denoised) ratio field
    let grad_mag = gradient(&u_work).magnitude();
    let min_grad_u = grad_mag.min_value();
    let total = grad_mag.values().len();
    let degenerate = grad_mag
        .values()
        .iter()
        .filter(|&&v| v < cfg.grad_floor)
        .count();

    // how well the recovered coefficient closes the ratio equation
    let ratio_problem = EllipticProblem::without_source(
        a_hat.clone(),
        ScalarField::constant(a_hat.grid(), 0.0),
        BoundaryTrace::restrict(&u_work),
    )?;
    let ratio_residual = residual_with(&ratio_problem, &u_work, FluxAverage::Harmonic)?;
    let ratio_residual_nondegenerate =
        masked_residual(&ratio_problem, &u_work, &grad_mag, cfg.grad_floor)?;

    let diagnostics = ReconstructionDiagnostics {
        min_grad_u,
        degenerate_fraction: degenerate as f64 / total as f64,
        ratio_residual,
        ratio_residual_nondegenerate,
        objective: a_stats.objective,
        data_term: a_stats.data_term,
        reg_term: a_stats.reg_term,
        nonpositive_a_nodes: a_stats.nonpositive_nodes,
        a_min: a_hat.min_value(),
        boundary_mismatch: system.boundary_mismatch,
    };

    Ok(ReconstructionResult {
        a_hat,
        u1_hat,
        d_hat,
        sigma_hat,
        diagnostics,
        stats: ReconstructionStats {
            recover_a: a_stats,
            recover_u1: u1_stats,
            wall_seconds: start.elapsed().as_secs_f64(),
        },
    })
}

/// Relative residual restricted to nodes where `|∇U|` clears the floor.
fn masked_residual(
    p: &EllipticProblem,
    u: &ScalarField,
    grad_mag: &ScalarField,
    floor: f64,
) -> Result<f64> {
    let (r, op_u) = crate::elliptic::residual_parts(p, u, FluxAverage::Harmonic)?;
    let grid = p.grid();
    let mut num_sq = 0.0;
    let mut den_sq = 0.0;
    for node in 0..grid.num_nodes() {
        if grad_mag.get(node) < floor {
            continue;
        }
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
