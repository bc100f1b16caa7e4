//! Illumination pairs: unimodal constructions and a bimodal negative control.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::IlluminationPair;
use crate::grid::{BoundaryTrace, Grid};

/// Illumination descriptors.
///
/// `g₁` is constant for all kinds; the structure lives in the ratio
/// `g = g₂/g₁`, which is what the unimodality condition constrains.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum IlluminationSpec {
    /// Ratio with a single maximum arc and a single minimum arc:
    /// one cosine period along the perimeter (2D) or a cosine in `x`
    /// across the cube (3D). `phase` shifts the 2D profile in arc length;
    /// with the default 0 the extremes sit at corners, a shift of 0.5 puts
    /// them mid-edge.
    UnimodalCosine {
        g1: f64,
        mean: f64,
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Ratio `1 + slope·x`, monotone along each of two boundary arcs.
    AffineRatio { g1: f64, slope: f64 },
    /// Negative control: two maximum components (two cosine periods along
    /// the perimeter, or a cosine in `x` peaking on both opposite faces).
    Bimodal {
        g1: f64,
        mean: f64,
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
}

fn check_oscillation(mean: f64, amplitude: f64) -> Result<()> {
    if amplitude <= 0.0 {
        return Err(Error::Parameter(format!(
            "amplitude must be positive, got {amplitude}"
        )));
    }
    if mean - amplitude <= 0.0 {
        return Err(Error::Parameter(format!(
            "illumination positivity bound violated: mean {mean} minus amplitude {amplitude} is not positive"
        )));
    }
    Ok(())
}

fn check_g1(g1: f64) -> Result<()> {
    if g1 <= 0.0 {
        return Err(Error::Parameter(format!(
            "illumination positivity bound violated: g1 = {g1} must be positive"
        )));
    }
    Ok(())
}

/// Builds an illumination pair from a descriptor; the bimodal kind is marked
/// non-compliant by construction.
pub fn make_illuminations(grid: Grid, spec: &IlluminationSpec) -> Result<IlluminationPair> {
    use std::f64::consts::PI;
    match spec {
        IlluminationSpec::UnimodalCosine {
            g1,
            mean,
            amplitude,
            phase,
        } => {
            check_g1(*g1)?;
            check_oscillation(*mean, *amplitude)?;
            let (c, mean, amp, phase) = (*g1, *mean, *amplitude, *phase);
            let g2 = if grid.dim() == 2 {
                let perimeter = 4.0;
                BoundaryTrace::from_arc_length_fn(grid, |s| {
                    c * (mean + amp * (2.0 * PI * (s - phase) / perimeter).cos())
                })?
            } else {
                BoundaryTrace::from_fn(grid, |x| c * (mean + amp * (PI * x[0]).cos()))
            };
            IlluminationPair::new(BoundaryTrace::constant(grid, c), g2, true)
        }
        IlluminationSpec::AffineRatio { g1, slope } => {
            check_g1(*g1)?;
            if *slope == 0.0 {
                return Err(Error::Parameter(
                    "affine ratio needs a nonzero slope (a constant ratio is degenerate)".into(),
                ));
            }
            if 1.0 + slope.min(0.0) <= 0.0 {
                return Err(Error::Parameter(format!(
                    "illumination positivity bound violated: ratio 1 + {slope}·x is not positive on the domain"
                )));
            }
            let (c, b) = (*g1, *slope);
            let g2 = BoundaryTrace::from_fn(grid, |x| c * (1.0 + b * x[0]));
            IlluminationPair::new(BoundaryTrace::constant(grid, c), g2, true)
        }
        IlluminationSpec::Bimodal {
            g1,
            mean,
            amplitude,
            phase,
        } => {
            check_g1(*g1)?;
            check_oscillation(*mean, *amplitude)?;
            let (c, mean, amp, phase) = (*g1, *mean, *amplitude, *phase);
            let g2 = if grid.dim() == 2 {
                let perimeter = 4.0;
                BoundaryTrace::from_arc_length_fn(grid, |s| {
                    c * (mean + amp * (4.0 * PI * (s - phase) / perimeter).cos())
                })?
            } else {
                BoundaryTrace::from_fn(grid, |x| c * (mean + amp * (2.0 * PI * x[0]).cos()))
            };
            IlluminationPair::new(BoundaryTrace::constant(grid, c), g2, false)
        }
    }
}
