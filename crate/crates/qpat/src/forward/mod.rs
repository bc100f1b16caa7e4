//! Phantom and illumination construction inside the admissible class, photon
//! density solves, absorbed-energy data, and noise injection.
//!
//! Coefficient sets carry their measured a-priori bounds: two-sided positivity
//! constants for `D` and `σ` and discrete `W^{1,∞}` surrogates (sup norm plus
//! the largest one-sided difference quotient). Illumination pairs carry the
//! analogous trace bounds plus the derived ratio `g = g₂/g₁`, its boundary
//! mean, and the frequency ratio `F[g]`.

use serde::{Deserialize, Serialize};

use crate::elliptic::{solve_with_stats, EllipticProblem, SolveStats, SolverConfig};
use crate::error::{Error, Result};
use crate::grid::norms::{boundary_l2_norm, boundary_linf_norm};
use crate::grid::{
    boundary_h_half_norm, boundary_mean, gagliardo_h_half_norm, same_grid, tangential_gradient,
    BoundaryTrace, Grid, ScalarField,
};

mod illumination;
mod noise;
mod phantom;

pub use illumination::{make_illuminations, IlluminationSpec};
pub use noise::add_noise;
pub use phantom::{make_phantom, PhantomSpec};

/// Measured a-priori bounds of a coefficient pair.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CoefficientBounds {
    /// Smallest `λ₀` with `λ₀⁻¹ ≤ D ≤ λ₀` nodewise.
    pub lambda0: f64,
    /// Smallest `λ₁` with `λ₁⁻¹ ≤ σ ≤ λ₁` nodewise.
    pub lambda1: f64,
    /// Discrete `W^{1,∞}` norm of `D`.
    pub e0: f64,
    /// Discrete `W^{1,∞}` norm of `σ`.
    pub e1: f64,
}

/// A diffusion/absorption pair with its measured bounds.
#[derive(Debug, Clone)]
pub struct CoefficientSet {
    pub d: ScalarField,
    pub sigma: ScalarField,
    pub bounds: CoefficientBounds,
}

impl CoefficientSet {
    /// Wraps a coefficient pair, measuring the bounds and rejecting
    /// nonpositive fields.
    pub fn new(d: ScalarField, sigma: ScalarField) -> Result<CoefficientSet> {
        same_grid(d.grid(), sigma.grid())?;
        let d_min = d.min_value();
        if d_min <= 0.0 {
            return Err(Error::Coefficient(format!(
                "diffusion positivity bound violated: min D = {d_min} must be positive"
            )));
        }
        let s_min = sigma.min_value();
        if s_min <= 0.0 {
            return Err(Error::Coefficient(format!(
                "absorption positivity bound violated: min sigma = {s_min} must be positive"
            )));
        }
        let bounds = CoefficientBounds {
            lambda0: d.max_value().max(1.0 / d_min),
            lambda1: sigma.max_value().max(1.0 / s_min),
            e0: w1inf_norm(&d),
            e1: w1inf_norm(&sigma),
        };
        Ok(CoefficientSet { d, sigma, bounds })
    }

    pub fn grid(&self) -> Grid {
        self.d.grid()
    }

    /// Trace of the diffusion coefficient, the boundary datum of the inverse
    /// problem.
    pub fn d_boundary(&self) -> BoundaryTrace {
        BoundaryTrace::restrict(&self.d)
    }
}

/// Discrete `W^{1,∞}` surrogate: sup norm plus the largest one-sided
/// difference quotient.
pub fn w1inf_norm(f: &ScalarField) -> f64 {
    let grid = f.grid();
    let n = grid.n();
    let h = grid.spacing();
    let v = f.values();
    let strides = [1usize, n, n * n];
    let mut max_quot: f64 = 0.0;
    for idx in 0..grid.num_nodes() {
        let ijk = grid.node_ijk(idx);
        for axis in 0..grid.dim() {
            if ijk[axis] + 1 < n {
                let q = (v[idx + strides[axis]] - v[idx]).abs() / h;
                max_quot = max_quot.max(q);
            }
        }
    }
    crate::grid::norms::interior_linf_norm(f) + max_quot
}

/// Measured trace bounds of an illumination pair.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IlluminationBounds {
    /// Discrete `C²` surrogate: largest of sup norm, tangential gradient, and
    /// second tangential difference over both traces.
    pub mu0: f64,
    /// Smallest `μ₁` with `μ₁⁻¹ ≤ gᵢ ≤ μ₁` nodewise.
    pub mu1: f64,
    /// `1 / ‖g - ḡ‖_{L²(∂Ω)}`, the linear-independence constant.
    pub mu2: f64,
}

/// Two boundary illuminations with their derived ratio data.
#[derive(Debug, Clone)]
pub struct IlluminationPair {
    pub g1: BoundaryTrace,
    pub g2: BoundaryTrace,
    /// `g = g₂/g₁`.
    pub ratio: BoundaryTrace,
    /// Boundary mean `ḡ`.
    pub ratio_mean: f64,
    /// Frequency ratio `F[g] = ‖g-ḡ‖_{H^{1/2}} / ‖g-ḡ‖_{L²}`.
    pub frequency: f64,
    pub bounds: IlluminationBounds,
    /// False for negative-control constructions (bimodal ratios).
    pub compliant: bool,
}

impl IlluminationPair {
    /// Derives ratio data and bounds from two positive traces.
    pub fn new(g1: BoundaryTrace, g2: BoundaryTrace, compliant: bool) -> Result<IlluminationPair> {
        same_grid(g1.grid(), g2.grid())?;
        let grid = g1.grid();
        for (name, g) in [("g1", &g1), ("g2", &g2)] {
            let min = g.min_value();
            if min <= 0.0 {
                return Err(Error::Construction(format!(
                    "illumination positivity bound violated: min {name} = {min} must be positive"
                )));
            }
        }
        let ratio = g2.zip(&g1, |a, b| a / b)?;
        let ratio_mean = boundary_mean(&ratio);
        let centered = ratio.map(|v| v - ratio_mean);
        let l2 = boundary_l2_norm(&centered);
        if l2 == 0.0 {
            return Err(Error::Construction(
                "illuminations are linearly dependent: g2/g1 is constant on the boundary".into(),
            ));
        }
        let h_half = if grid.dim() == 2 {
            boundary_h_half_norm(&centered)?
        } else {
            gagliardo_h_half_norm(&centered)?
        };
        let mu1 = [&g1, &g2]
            .iter()
            .map(|g| g.max_value().max(1.0 / g.min_value()))
            .fold(0.0, f64::max);
        let mu0 = [&g1, &g2]
            .iter()
            .map(|g| c2_surrogate(g))
            .fold(0.0, f64::max);
        Ok(IlluminationPair {
            g1,
            g2,
            ratio,
            ratio_mean,
            frequency: h_half / l2,
            bounds: IlluminationBounds {
                mu0,
                mu1,
                mu2: 1.0 / l2,
            },
            compliant,
        })
    }

    pub fn grid(&self) -> Grid {
        self.g1.grid()
    }
}

/// Discrete `C²` surrogate of a trace: the largest of its sup norm, its
/// tangential gradient magnitude, and its second tangential difference.
pub fn c2_surrogate(t: &BoundaryTrace) -> f64 {
    let sup = boundary_linf_norm(t);
    let dt = tangential_gradient(t);
    let d_sup = boundary_linf_norm(&dt);
    let second = if t.grid().dim() == 2 {
        let h = t.grid().spacing();
        let v = t.values();
        let m = v.len();
        (0..m)
            .map(|j| ((v[(j + 1) % m] - 2.0 * v[j] + v[(j + m - 1) % m]) / (h * h)).abs())
            .fold(0.0, f64::max)
    } else {
        // magnitude of the tangential gradient of the tangential gradient
        boundary_linf_norm(&tangential_gradient(&dt))
    };
    sup.max(d_sup).max(second)
}

/// Absorbed-energy pair, possibly noisy, with its provenance.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    pub h1: ScalarField,
    pub h2: ScalarField,
    /// Realized L² perturbation size per field (0 for clean data).
    pub noise_level: f64,
    pub seed: u64,
}

impl MeasurementSet {
    /// Clean measurements; both fields must be strictly positive.
    pub fn noiseless(h1: ScalarField, h2: ScalarField) -> Result<MeasurementSet> {
        same_grid(h1.grid(), h2.grid())?;
        for (name, h) in [("H1", &h1), ("H2", &h2)] {
            let min = h.min_value();
            if min <= 0.0 {
                return Err(Error::Degeneracy(format!(
                    "absorbed energy {name} must be positive before noise, min value {min}"
                )));
            }
        }
        Ok(MeasurementSet {
            h1,
            h2,
            noise_level: 0.0,
            seed: 0,
        })
    }

    /// Adds a perturbation of exact L² size `target_eps` to each field; the
    /// two fields use independent streams derived from `seed`.
    pub fn with_noise(self, target_eps: f64, seed: u64) -> Result<MeasurementSet> {
        let h1 = add_noise(&self.h1, target_eps, seed)?;
        let h2 = add_noise(&self.h2, target_eps, seed ^ 0x9e3779b97f4a7c15)?;
        Ok(MeasurementSet {
            h1,
            h2,
            noise_level: target_eps,
            seed,
        })
    }
}

/// Solves `-div(D∇u) + σu = 0` with `u = g` on the boundary.
///
/// The returned density is strictly positive and bounded by `max g`, the
/// discrete counterpart of the maximum principle for this problem.
pub fn solve_photon_density(
    c: &CoefficientSet,
    g: &BoundaryTrace,
    cfg: &SolverConfig,
) -> Result<ScalarField> {
    solve_photon_density_with_stats(c, g, cfg).map(|(u, _)| u)
}

pub fn solve_photon_density_with_stats(
    c: &CoefficientSet,
    g: &BoundaryTrace,
    cfg: &SolverConfig,
) -> Result<(ScalarField, SolveStats)> {
    let g_min = g.min_value();
    if g_min <= 0.0 {
        return Err(Error::Parameter(format!(
            "illumination must be positive, min value {g_min}"
        )));
    }
    let p = EllipticProblem::without_source(c.d.clone(), c.sigma.clone(), g.clone())?;
    let (u, stats) = solve_with_stats(&p, cfg)?;
    let u_min = u.min_value();
    if u_min <= 0.0 {
        return Err(Error::Degeneracy(format!(
            "photon density lost positivity (min {u_min}); the discrete maximum principle failed"
        )));
    }
    Ok((u, stats))
}

/// Absorbed energy `H = σ u`, nodewise.
pub fn absorbed_energy(sigma: &ScalarField, u: &ScalarField) -> Result<ScalarField> {
    sigma.zip(u, |s, v| s * v)
}
