//! Phantom construction inside the admissible coefficient class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::CoefficientSet;
use crate::grid::{Grid, ScalarField};

/// Phantom descriptors, serializable as experiment manifests.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PhantomSpec {
    /// Constant coefficients.
    Constant { d: f64, sigma: f64 },
    /// Smooth compactly supported bumps added to constant backgrounds.
    SmoothBump {
        base_d: f64,
        base_sigma: f64,
        center: Vec<f64>,
        radius: f64,
        #[serde(default)]
        amp_d: f64,
        #[serde(default)]
        amp_sigma: f64,
    },
    /// Mollified characteristic function of a ball; `width` is the
    /// transition-shell thickness and must resolve on the grid.
    SmoothedInclusion {
        base_d: f64,
        base_sigma: f64,
        center: Vec<f64>,
        radius: f64,
        width: f64,
        #[serde(default)]
        d_contrast: f64,
        #[serde(default)]
        sigma_contrast: f64,
    },
}

/// `cos²` bump profile: 1 at the center, 0 with vanishing slope at `ρ = 1`.
fn bump_profile(rho: f64) -> f64 {
    if rho >= 1.0 {
        0.0
    } else {
        let c = (std::f64::consts::FRAC_PI_2 * rho).cos();
        c * c
    }
}

/// Quintic smoothstep: 0 below 0, 1 above 1, C² in between.
fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (t * (6.0 * t - 15.0) + 10.0)
}

fn distance(x: &[f64; 3], center: &[f64], dim: usize) -> f64 {
    (0..dim)
        .map(|a| (x[a] - center[a]).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn check_center(center: &[f64], dim: usize) -> Result<()> {
    if center.len() != dim {
        return Err(Error::Parameter(format!(
            "phantom center has {} coordinates on a {}D grid",
            center.len(),
            dim
        )));
    }
    if center.iter().any(|&c| !(0.0..=1.0).contains(&c)) {
        return Err(Error::Parameter(format!(
            "phantom center {center:?} lies outside the domain"
        )));
    }
    Ok(())
}

fn check_positive(name: &str, base: f64, variation: f64) -> Result<()> {
    if base <= 0.0 {
        return Err(Error::Parameter(format!(
            "{name} positivity bound violated: background {base} must be positive"
        )));
    }
    if base + variation <= 0.0 {
        return Err(Error::Parameter(format!(
            "{name} positivity bound violated: background {base} plus contrast {variation} is not positive"
        )));
    }
    Ok(())
}

/// Builds an admissible coefficient set from a descriptor; the measured
/// bounds are attached to the result.
pub fn make_phantom(grid: Grid, spec: &PhantomSpec) -> Result<CoefficientSet> {
    let h = grid.spacing();
    match spec {
        PhantomSpec::Constant { d, sigma } => {
            check_positive("diffusion", *d, 0.0)?;
            check_positive("absorption", *sigma, 0.0)?;
            CoefficientSet::new(
                ScalarField::constant(grid, *d),
                ScalarField::constant(grid, *sigma),
            )
        }
        PhantomSpec::SmoothBump {
            base_d,
            base_sigma,
            center,
            radius,
            amp_d,
            amp_sigma,
        } => {
            check_center(center, grid.dim())?;
            check_positive("diffusion", *base_d, amp_d.min(0.0))?;
            check_positive("absorption", *base_sigma, amp_sigma.min(0.0))?;
            if *radius < 4.0 * h {
                return Err(Error::Parameter(format!(
                    "Lipschitz bound violated: bump radius {radius} is below 4h = {}; \
                     the W^(1,inf) norm would scale like 1/h",
                    4.0 * h
                )));
            }
            let d = ScalarField::from_fn(grid, |x| {
                base_d + amp_d * bump_profile(distance(x, center, grid.dim()) / radius)
            });
            let sigma = ScalarField::from_fn(grid, |x| {
                base_sigma + amp_sigma * bump_profile(distance(x, center, grid.dim()) / radius)
            });
            CoefficientSet::new(d, sigma)
        }
        PhantomSpec::SmoothedInclusion {
            base_d,
            base_sigma,
            center,
            radius,
            width,
            d_contrast,
            sigma_contrast,
        } => {
            check_center(center, grid.dim())?;
            check_positive("diffusion", *base_d, d_contrast.min(0.0))?;
            check_positive("absorption", *base_sigma, sigma_contrast.min(0.0))?;
            if *width < 4.0 * h {
                return Err(Error::Parameter(format!(
                    "Lipschitz bound violated: transition width {width} is below 4h = {}; \
                     the W^(1,inf) norm would scale like 1/h",
                    4.0 * h
                )));
            }
            if *radius <= 0.0 {
                return Err(Error::Parameter(format!(
                    "inclusion radius must be positive, got {radius}"
                )));
            }
            let d = ScalarField::from_fn(grid, |x| {
                let rho = distance(x, center, grid.dim());
                base_d + d_contrast * smoothstep((radius - rho) / width)
            });
            let sigma = ScalarField::from_fn(grid, |x| {
                let rho = distance(x, center, grid.dim());
                base_sigma + sigma_contrast * smoothstep((radius - rho) / width)
            });
            CoefficientSet::new(d, sigma)
        }
    }
}
