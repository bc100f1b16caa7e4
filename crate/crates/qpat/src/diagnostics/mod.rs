//! Computable analogues of the structural hypotheses behind the stability
//! theory: unimodality certification of boundary data, the frequency ratio,
//! gradient vanishing rates and mass ratios, boundary collar bounds, the
//! weighted coefficient discrepancy, and the Hölder stability experiment.
//!
//! None of these predict the theory's constants; they measure the discrete
//! counterparts so sweeps can bracket them empirically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::norms::{boundary_l2_norm, interior_l2_norm};
use crate::grid::{boundary_h_half_norm, boundary_mean, gagliardo_h_half_norm, BoundaryTrace};

mod stability;
mod unimodality;
mod vanishing;

pub use stability::{
    holder_fit, stability_pair, weighted_discrepancy, HolderFit, StabilityReport,
    WeightedDiscrepancy,
};
pub use unimodality::{default_level_tol, unimodality_check, OmegaSample, UnimodalityReport};
pub use vanishing::{
    collar_gradient_floor, gradient_mass_ratio, vanishing_rate, CollarReport, VanishingRateReport,
};

/// Frequency ratio `F[g] = ‖g-ḡ‖_{H^{1/2}} / ‖g-ḡ‖_{L²}` of a boundary trace,
/// using the grid's `H^{1/2}` realization (Fourier on the perimeter,
/// Gagliardo on the cube).
pub fn frequency_function(g: &BoundaryTrace) -> Result<f64> {
    let mean = boundary_mean(g);
    let centered = g.map(|v| v - mean);
    let l2 = boundary_l2_norm(&centered);
    let scale = g.values().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if l2 <= 1e-14 * (1.0 + scale) {
        return Err(Error::DegenerateInput(
            "trace is constant up to rounding; the frequency ratio is undefined".into(),
        ));
    }
    let h_half = if g.grid().dim() == 2 {
        boundary_h_half_norm(&centered)?
    } else {
        gagliardo_h_half_norm(&centered)?
    };
    Ok(h_half / l2)
}

/// Simple least-squares line fit in (x, y), with goodness diagnostics.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of the slope.
    pub slope_stderr: f64,
    /// Root-mean-square residual.
    pub rms: f64,
}

pub(crate) fn line_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - x_mean) * (x - x_mean);
        sxy += (x - x_mean) * (y - y_mean);
        syy += (y - y_mean) * (y - y_mean);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let mut ss_res = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let r = y - (slope * x + intercept);
        ss_res += r * r;
    }
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    let dof = (xs.len().max(3) - 2) as f64;
    let slope_stderr = (ss_res / dof / sxx).sqrt();
    LineFit {
        slope,
        intercept,
        r_squared,
        slope_stderr,
        rms: (ss_res / n).sqrt(),
    }
}

/// L² distance helper used by the stability experiments.
pub(crate) fn field_gap(a: &crate::grid::ScalarField, b: &crate::grid::ScalarField) -> Result<f64> {
    Ok(interior_l2_norm(&a.zip(b, |x, y| x - y)?))
}
