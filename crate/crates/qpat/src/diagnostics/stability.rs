//! Stability experiments: the weighted coefficient discrepancy, data-gap
//! versus coefficient-gap measurements for pairs of coefficient sets, and the
//! Hölder exponent fit over a sweep.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{field_gap, line_fit};
use crate::elliptic::SolverConfig;
use crate::error::{Error, Result};
use crate::forward::{absorbed_energy, solve_photon_density, CoefficientSet, IlluminationPair};
use crate::grid::norms::{boundary_linf_norm, interior_l2_norm};
use crate::grid::{gradient, same_grid, BoundaryTrace, ScalarField};

/// The three pieces of the weighted estimate: the gradient-weighted
/// coefficient discrepancy and the shape of its bound. No constant is
/// asserted; ratio studies bracket it empirically.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WeightedDiscrepancy {
    /// `∫_Ω |a-b| |∇u|²`.
    pub lhs: f64,
    /// `‖u-v‖_{L²(Ω)}`.
    pub data_gap: f64,
    /// `data_gap^θ + a_bd_gap`.
    pub rhs_shape: f64,
}

/// Evaluates the weighted discrepancy record for exponent `theta ∈ (0, 1/2)`.
pub fn weighted_discrepancy(
    a: &ScalarField,
    b: &ScalarField,
    u: &ScalarField,
    v: &ScalarField,
    a_bd_gap: f64,
    theta: f64,
) -> Result<WeightedDiscrepancy> {
    if !(theta > 0.0 && theta < 0.5) {
        return Err(Error::Parameter(format!(
            "theta must lie in (0, 1/2), got {theta}"
        )));
    }
    same_grid(a.grid(), b.grid())?;
    same_grid(a.grid(), u.grid())?;
    same_grid(a.grid(), v.grid())?;
    let grid = a.grid();
    let grad_sq = gradient(u).magnitude_squared();
    let mut lhs = 0.0;
    for idx in 0..grid.num_nodes() {
        lhs += grid.interior_weight(idx) * (a.get(idx) - b.get(idx)).abs() * grad_sq.get(idx);
    }
    let data_gap = interior_l2_norm(&u.zip(v, |x, y| x - y)?);
    Ok(WeightedDiscrepancy {
        lhs,
        data_gap,
        rhs_shape: data_gap.powf(theta) + a_bd_gap,
    })
}

/// One stability experiment: data discrepancy against coefficient
/// discrepancy for a pair of admissible coefficient sets under the same
/// illuminations.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StabilityReport {
    /// `max_i ‖H_i^{(1)} - H_i^{(2)}‖_{L²(Ω)}`.
    pub eps: f64,
    /// `‖D^{(1)} - D^{(2)}‖_{L^∞(∂Ω)}`.
    pub eps_prime: f64,
    /// `‖D^{(1)} - D^{(2)}‖_{L²(Ω)}`.
    pub err_d: f64,
    /// `‖σ^{(1)} - σ^{(2)}‖_{L²(Ω)}`.
    pub err_sigma: f64,
}

impl StabilityReport {
    /// The regressor of the Hölder fit.
    pub fn gap(&self) -> f64 {
        self.eps + self.eps_prime
    }

    /// The response of the Hölder fit.
    pub fn err(&self) -> f64 {
        self.err_d + self.err_sigma
    }
}

/// Solves the four photon densities `u_i^{(j)}` and measures the data and
/// coefficient discrepancies between the two sets.
pub fn stability_pair(
    set1: &CoefficientSet,
    set2: &CoefficientSet,
    illum: &IlluminationPair,
    cfg: &SolverConfig,
) -> Result<StabilityReport> {
    same_grid(set1.grid(), set2.grid())?;
    same_grid(set1.grid(), illum.grid())?;
    let mut eps: f64 = 0.0;
    for g in [&illum.g1, &illum.g2] {
        let u_1 = solve_photon_density(set1, g, cfg)?;
        let u_2 = solve_photon_density(set2, g, cfg)?;
        let h_1 = absorbed_energy(&set1.sigma, &u_1)?;
        let h_2 = absorbed_energy(&set2.sigma, &u_2)?;
        eps = eps.max(field_gap(&h_1, &h_2)?);
    }
    let d_gap = set1.d.zip(&set2.d, |x, y| x - y)?;
    let eps_prime = boundary_linf_norm(&BoundaryTrace::restrict(&d_gap));
    Ok(StabilityReport {
        eps,
        eps_prime,
        err_d: interior_l2_norm(&d_gap),
        err_sigma: field_gap(&set1.sigma, &set2.sigma)?,
    })
}

/// Fitted power law `err ≈ C·gap^θ`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HolderFit {
    pub theta: f64,
    pub c: f64,
    pub r_squared: f64,
    /// 95% confidence interval for `theta` (normal approximation).
    pub theta_ci: (f64, f64),
    pub n_points: usize,
}

/// Least-squares fit of `log err = θ log gap + log C` over `(gap, err)`
/// pairs. Needs at least 4 strictly positive points.
pub fn holder_fit(points: &[(f64, f64)]) -> Result<HolderFit> {
    if points.len() < 4 {
        return Err(Error::Parameter(format!(
            "need at least 4 points for a power-law fit, got {}",
            points.len()
        )));
    }
    if let Some(&(g, e)) = points.iter().find(|&&(g, e)| g <= 0.0 || e <= 0.0) {
        return Err(Error::Parameter(format!(
            "power-law fit needs positive entries, got ({g}, {e})"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|&(g, _)| g.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, e)| e.ln()).collect();
    let fit = line_fit(&xs, &ys);
    let half_width = 1.96 * fit.slope_stderr;
    Ok(HolderFit {
        theta: fit.slope,
        c: fit.intercept.exp(),
        r_squared: fit.r_squared,
        theta_ci: (fit.slope - half_width, fit.slope + half_width),
        n_points: points.len(),
    })
}
