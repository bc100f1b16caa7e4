//! Gradient-degeneracy diagnostics: how fast `∫_{B_r} |∇u|²` can vanish at an
//! interior point, what share of the total gradient mass a ball carries, and
//! whether `|∇u|` stays bounded away from zero in a boundary collar.

use serde::{Deserialize, Serialize};

use crate::diagnostics::line_fit;
use crate::error::{Error, Result};
use crate::grid::norms::interior_l2_norm;
use crate::grid::{ball_integral, gradient, ScalarField};

/// Power-law fit of the gradient mass in shrinking balls.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VanishingRateReport {
    pub x0: Vec<f64>,
    pub radii: Vec<f64>,
    /// `∫_{B_r} |∇u|²` for each radius.
    pub integrals: Vec<f64>,
    /// Fitted exponent in `∫_{B_r} |∇u|² ≈ r^{K₁}/K₂`; `None` when a ball
    /// carries no gradient mass.
    pub k1_fit: Option<f64>,
    pub k2_fit: Option<f64>,
    /// RMS residual of the log-log fit.
    pub fit_rms: Option<f64>,
}

/// Measures `∫_{B_r(x0)} |∇u|²` over the given radii and fits
/// `log ∫ = K₁ log r - log K₂`.
pub fn vanishing_rate(u: &ScalarField, x0: &[f64], radii: &[f64]) -> Result<VanishingRateReport> {
    let h = u.grid().spacing();
    if radii.len() < 2 {
        return Err(Error::Parameter(format!(
            "need at least two radii for a rate fit, got {}",
            radii.len()
        )));
    }
    for &r in radii {
        if r < 4.0 * h {
            return Err(Error::Parameter(format!(
                "radius {r} is below the resolvable scale 4h = {}",
                4.0 * h
            )));
        }
    }
    let grad_sq = gradient(u).magnitude_squared();
    let mut integrals = Vec::with_capacity(radii.len());
    for &r in radii {
        integrals.push(ball_integral(&grad_sq, x0, r)?);
    }

    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (&r, &i) in radii.iter().zip(&integrals) {
        if i > 0.0 {
            xs.push(r.ln());
            ys.push(i.ln());
        }
    }
    let (k1_fit, k2_fit, fit_rms) = if xs.len() >= 2 {
        let fit = line_fit(&xs, &ys);
        (Some(fit.slope), Some((-fit.intercept).exp()), Some(fit.rms))
    } else {
        (None, None, None)
    };

    Ok(VanishingRateReport {
        x0: x0.to_vec(),
        radii: radii.to_vec(),
        integrals,
        k1_fit,
        k2_fit,
        fit_rms,
    })
}

/// `∫_{B_ρ(x0)} |∇u|² / ∫_Ω |∇u|²`, the share of gradient mass a ball holds.
pub fn gradient_mass_ratio(u: &ScalarField, x0: &[f64], rho: f64) -> Result<f64> {
    let grad_sq = gradient(u).magnitude_squared();
    let total = interior_l2_norm(&gradient(u).magnitude());
    let total_sq = total * total;
    if total_sq == 0.0 {
        return Err(Error::DegenerateInput(
            "field has zero gradient; the mass ratio is 0/0".into(),
        ));
    }
    let ball = ball_integral(&grad_sq, x0, rho)?;
    Ok(ball / total_sq)
}

/// Minimum of `|∇u|` over the boundary collar of width `rho`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollarReport {
    pub rho: f64,
    pub min_grad: f64,
}

/// Measures the Hopf-type collar bound: `min |∇u|` over nodes within
/// distance `rho` of the boundary.
pub fn collar_gradient_floor(u: &ScalarField, rho: f64) -> Result<CollarReport> {
    if !(rho > 0.0 && rho < 0.5) {
        return Err(Error::Parameter(format!(
            "collar width must lie in (0, 1/2), got {rho}"
        )));
    }
    let grid = u.grid();
    let grad = gradient(u);
    let mut min_grad = f64::INFINITY;
    for idx in 0..grid.num_nodes() {
        if grid.boundary_distance(idx) <= rho {
            min_grad = min_grad.min(grad.magnitude_at(idx));
        }
    }
    Ok(CollarReport { rho, min_grad })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    #[test]
    fn affine_field_has_dimension_rate() {
        // oracle: |∇u|² = c² so ∫_{B_r} = c²·vol(B_r) ∝ r^dim
        let grid = Grid::new(2, 129).unwrap();
        let u = ScalarField::from_fn(grid, |x| 3.0 * x[0] + 4.0 * x[1]);
        let radii: Vec<f64> = [0.0625, 0.08, 0.1, 0.125, 0.16, 0.2].to_vec();
        let report = vanishing_rate(&u, &[0.5, 0.5], &radii).unwrap();
        let k1 = report.k1_fit.unwrap();
        assert!((k1 - 2.0).abs() / 2.0 < 0.05, "K1 = {k1}");
        // integrals monotone
        for w in report.integrals.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn constant_field_rate_is_undefined() {
        let grid = Grid::new(2, 65).unwrap();
        let u = ScalarField::constant(grid, 1.0);
        let report = vanishing_rate(&u, &[0.5, 0.5], &[0.1, 0.15, 0.2]).unwrap();
        assert!(report.k1_fit.is_none());
        assert!(report.integrals.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn saddle_field_vanishes_faster() {
        // oracle: u = x²-y² centered, |∇u|² = 4r², ∫_{B_r} = 2π r⁴: K₁ = dim+2
        let grid = Grid::new(2, 129).unwrap();
        let u = ScalarField::from_fn(grid, |x| (x[0] - 0.5).powi(2) - (x[1] - 0.5).powi(2));
        let radii: Vec<f64> = [0.0625, 0.08, 0.1, 0.125, 0.16, 0.2].to_vec();
        let report = vanishing_rate(&u, &[0.5, 0.5], &radii).unwrap();
        let k1 = report.k1_fit.unwrap();
        assert!((k1 - 4.0).abs() < 0.3, "K1 = {k1}");
    }

    #[test]
    fn rejects_unresolvable_radii() {
        let grid = Grid::new(2, 33).unwrap();
        let u = ScalarField::from_fn(grid, |x| x[0]);
        let h = grid.spacing();
        assert!(vanishing_rate(&u, &[0.5, 0.5], &[2.0 * h, 0.2]).is_err());
        assert!(vanishing_rate(&u, &[0.9, 0.5], &[0.2, 0.3]).is_err());
    }

    #[test]
    fn mass_ratio_of_affine_is_area_ratio() {
        let grid = Grid::new(2, 129).unwrap();
        let u = ScalarField::from_fn(grid, |x| x[0] + 2.0 * x[1]);
        let ratio = gradient_mass_ratio(&u, &[0.5, 0.5], 0.25).unwrap();
        let exact = PI * 0.0625;
        assert!((ratio - exact).abs() / exact < 0.02, "ratio {ratio}");
    }

    #[test]
    fn mass_ratio_reaches_one_when_ball_covers_the_gradient_support() {
        // gradient supported in B_0.2(center): a ball of radius 0.3 holds
        // all the mass
        let grid = Grid::new(2, 129).unwrap();
        let u = ScalarField::from_fn(grid, |x| {
            let r = ((x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2)).sqrt();
            if r >= 0.2 {
                0.0
            } else {
                let c = (PI * r / 0.4).cos();
                c * c
            }
        });
        let ratio = gradient_mass_ratio(&u, &[0.5, 0.5], 0.3).unwrap();
        assert!(ratio > 0.999, "ratio {ratio}");
        assert!(ratio <= 1.0 + 1e-12);
        // and it grows monotonically toward that limit
        let smaller = gradient_mass_ratio(&u, &[0.5, 0.5], 0.1).unwrap();
        assert!(smaller < ratio);
    }

    #[test]
    fn mass_ratio_degenerate_on_constants() {
        let grid = Grid::new(2, 33).unwrap();
        assert!(matches!(
            gradient_mass_ratio(&ScalarField::constant(grid, 2.0), &[0.5, 0.5], 0.2),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn collar_floor_of_affine() {
        let grid = Grid::new(2, 65).unwrap();
        let u = ScalarField::from_fn(grid, |x| 2.0 * x[0] + 3.0 * x[1]);
        let report = collar_gradient_floor(&u, 0.1).unwrap();
        assert!((report.min_grad - 13.0f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn collar_misses_interior_critical_point() {
        // radial bump with the critical point at the center: a thin collar
        // keeps a positive floor
        let grid = Grid::new(2, 65).unwrap();
        let u = ScalarField::from_fn(grid, |x| {
            let r2 = (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2);
            1.0 + r2
        });
        let report = collar_gradient_floor(&u, 0.1).unwrap();
        assert!(report.min_grad > 0.0, "min grad {}", report.min_grad);
        assert!(collar_gradient_floor(&u, 0.6).is_err());
    }
}
