//! Interior and boundary norms.
//!
//! Interior integrals use tensor trapezoidal quadrature (exact on constants);
//! boundary integrals use the weights from [`crate::grid::Grid::boundary_weights`]. Two
//! realizations of the boundary `H^{1/2}` norm are provided: a Fourier
//! multiplier norm on the 2D perimeter (the perimeter is a uniform closed
//! cycle, so the DFT applies directly) and a Gagliardo double-sum norm on the
//! cube surface. Both are conventions: consistent under refinement, not the
//! unique fractional norm.

use crate::error::{Error, Result};
use crate::grid::{BoundaryTrace, ScalarField};

/// Trapezoidal approximation of `(∫_Ω f²)^{1/2}`.
pub fn interior_l2_norm(f: &ScalarField) -> f64 {
    let grid = f.grid();
    let mut acc = 0.0;
    for (idx, &v) in f.values().iter().enumerate() {
        acc += grid.interior_weight(idx) * v * v;
    }
    acc.sqrt()
}

/// Max of `|f|` over all nodes.
pub fn interior_linf_norm(f: &ScalarField) -> f64 {
    f.values().iter().fold(0.0, |m, &v| m.max(v.abs()))
}

/// Quadrature approximation of `(∫_∂Ω t²)^{1/2}`.
pub fn boundary_l2_norm(t: &BoundaryTrace) -> f64 {
    let w = t.grid().boundary_weights();
    t.values()
        .iter()
        .zip(&w)
        .map(|(&v, &wi)| wi * v * v)
        .sum::<f64>()
        .sqrt()
}

/// Max of `|t|` over boundary nodes.
pub fn boundary_linf_norm(t: &BoundaryTrace) -> f64 {
    t.values().iter().fold(0.0, |m, &v| m.max(v.abs()))
}

/// Boundary mean `|∂Ω|^{-1} ∫_∂Ω t`.
pub fn boundary_mean(t: &BoundaryTrace) -> f64 {
    let w = t.grid().boundary_weights();
    let total: f64 = w.iter().sum();
    let integral: f64 = t.values().iter().zip(&w).map(|(&v, &wi)| wi * v).sum();
    integral / total
}

/// Fourier `H^{1/2}` norm of a periodic trace on the 2D perimeter.
///
/// With arc-length samples `t_j` at uniform spacing `h` and perimeter `L`,
/// the squared norm is `Σ_k (1+κ_k²)^{1/2} |t̂_k|²` with `κ_k = 2πk/L` and the
/// DFT normalized so `Σ_k |t̂_k|²` equals the squared boundary L² norm.
pub fn boundary_h_half_norm(t: &BoundaryTrace) -> Result<f64> {
    if t.grid().dim() != 2 {
        return Err(Error::Operation(
            "the Fourier H^{1/2} norm is defined on the 2D perimeter; use gagliardo_h_half_norm on the cube".into(),
        ));
    }
    let m = t.len();
    let h = t.grid().spacing();
    let perimeter = 4.0;
    let values = t.values();

    // twiddle table: e^{-2πi j / m}
    let table: Vec<(f64, f64)> = (0..m)
        .map(|j| {
            let ang = -2.0 * std::f64::consts::PI * j as f64 / m as f64;
            (ang.cos(), ang.sin())
        })
        .collect();

    let mut norm_sq = 0.0;
    for k in 0..m {
        let mut re = 0.0;
        let mut im = 0.0;
        let mut pos = 0usize;
        for &v in values.iter() {
            let (c, s) = table[pos];
            re += v * c;
            im += v * s;
            pos += k;
            if pos >= m {
                pos -= m;
            }
        }
        let coeff_sq = (h / m as f64) * (re * re + im * im);
        let signed_k = if k <= m / 2 {
            k as f64
        } else {
            k as f64 - m as f64
        };
        let kappa = 2.0 * std::f64::consts::PI * signed_k / perimeter;
        norm_sq += (1.0 + kappa * kappa).sqrt() * coeff_sq;
    }
    Ok(norm_sq.sqrt())
}

/// Gagliardo `H^{1/2}` norm on the cube surface.
///
/// Squared norm = boundary L²² plus the double sum over boundary node pairs
/// of `|t(x)-t(y)|² / |x-y|³ · w_x w_y`. O(M²) in the number of boundary
/// nodes; fine at desk scale.
pub fn gagliardo_h_half_norm(t: &BoundaryTrace) -> Result<f64> {
    let grid = t.grid();
    if grid.dim() != 3 {
        return Err(Error::Operation(
            "the Gagliardo H^{1/2} norm is the 3D realization; use boundary_h_half_norm on the perimeter".into(),
        ));
    }
    let ids = grid.boundary_nodes();
    let w = grid.boundary_weights();
    let coords: Vec<[f64; 3]> = ids.iter().map(|&idx| grid.node_coords(idx)).collect();
    let values = t.values();

    let l2 = boundary_l2_norm(t);
    let mut semi_sq = 0.0;
    for i in 0..values.len() {
        let (xi, vi, wi) = (coords[i], values[i], w[i]);
        for j in (i + 1)..values.len() {
            let dx = xi[0] - coords[j][0];
            let dy = xi[1] - coords[j][1];
            let dz = xi[2] - coords[j][2];
            let dist_sq = dx * dx + dy * dy + dz * dz;
            let dv = vi - values[j];
            // exponent (n-1) + 2s = 3 for n = 3, s = 1/2
            semi_sq += 2.0 * dv * dv / (dist_sq * dist_sq.sqrt()) * wi * w[j];
        }
    }
    Ok((l2 * l2 + semi_sq).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    #[test]
    fn l2_of_constants() {
        let g = Grid::new(2, 33).unwrap();
        assert!((interior_l2_norm(&ScalarField::constant(g, 1.0)) - 1.0).abs() < 1e-14);
        assert_eq!(interior_l2_norm(&ScalarField::constant(g, 0.0)), 0.0);
    }

    #[test]
    fn l2_of_sine_product() {
        // oracle: ∫∫ sin²(πx)sin²(πy) = 1/4, so the norm is 1/2
        let g = Grid::new(2, 129).unwrap();
        let f = ScalarField::from_fn(g, |x| (PI * x[0]).sin() * (PI * x[1]).sin());
        assert!((interior_l2_norm(&f) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn linf_examples() {
        let g = Grid::new(2, 17).unwrap();
        assert_eq!(interior_linf_norm(&ScalarField::constant(g, -2.0)), 2.0);
        assert_eq!(interior_linf_norm(&ScalarField::constant(g, 0.0)), 0.0);
        let f = ScalarField::from_fn(g, |x| x[0] * x[1]);
        assert_eq!(interior_linf_norm(&f), 1.0);
    }

    #[test]
    fn boundary_l2_of_constants() {
        let g = Grid::new(2, 33).unwrap();
        let t = BoundaryTrace::constant(g, 1.0);
        assert!((boundary_l2_norm(&t) - 2.0).abs() < 1e-14);
        assert_eq!(boundary_l2_norm(&BoundaryTrace::constant(g, 0.0)), 0.0);
    }

    #[test]
    fn boundary_l2_of_cosine() {
        // oracle: ∫₀⁴ cos²(2πs/4) ds = 2
        let g = Grid::new(2, 129).unwrap();
        let t = BoundaryTrace::from_arc_length_fn(g, |s| (2.0 * PI * s / 4.0).cos()).unwrap();
        assert!((boundary_l2_norm(&t) - 2.0f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn h_half_of_constant_is_sqrt_perimeter_scaled() {
        let g = Grid::new(2, 33).unwrap();
        let t = BoundaryTrace::constant(g, 3.0);
        let expected = 3.0 * 4.0f64.sqrt();
        assert!((boundary_h_half_norm(&t).unwrap() - expected).abs() < 1e-10);
        assert_eq!(
            boundary_h_half_norm(&BoundaryTrace::constant(g, 0.0)).unwrap(),
            0.0
        );
    }

    #[test]
    fn h_half_of_single_mode() {
        // oracle: single mode k=1 has norm √2·(1+(2π/L)²)^{1/4} with L = 4
        let g = Grid::new(2, 129).unwrap();
        let t = BoundaryTrace::from_arc_length_fn(g, |s| (2.0 * PI * s / 4.0).cos()).unwrap();
        let expected = 2.0f64.sqrt() * (1.0 + (2.0 * PI / 4.0).powi(2)).powf(0.25);
        assert!((boundary_h_half_norm(&t).unwrap() - expected).abs() < 1e-3);
    }

    #[test]
    fn h_half_rejects_3d() {
        let g = Grid::new(3, 17).unwrap();
        let t = BoundaryTrace::constant(g, 1.0);
        assert!(boundary_h_half_norm(&t).is_err());
    }

    #[test]
    fn h_half_dominates_l2() {
        let g = Grid::new(2, 33).unwrap();
        let t = BoundaryTrace::from_arc_length_fn(g, |s| (2.0 * PI * s).sin() + 0.3 * s).unwrap();
        assert!(boundary_h_half_norm(&t).unwrap() >= boundary_l2_norm(&t));
    }

    #[test]
    fn gagliardo_on_constants() {
        let g = Grid::new(3, 17).unwrap();
        assert_eq!(
            gagliardo_h_half_norm(&BoundaryTrace::constant(g, 0.0)).unwrap(),
            0.0
        );
        // seminorm vanishes on constants, so the norm is the boundary L² = √6
        let one = gagliardo_h_half_norm(&BoundaryTrace::constant(g, 1.0)).unwrap();
        assert!((one - 6.0f64.sqrt()).abs() < 1e-2);
    }

    #[test]
    fn gagliardo_is_deterministic() {
        let g = Grid::new(3, 17).unwrap();
        // single bump on the x=0 face
        let t = BoundaryTrace::from_fn(g, |x| {
            if x[0] == 0.0 {
                let dy = x[1] - 0.5;
                let dz = x[2] - 0.5;
                (-40.0 * (dy * dy + dz * dz)).exp()
            } else {
                0.0
            }
        });
        let a = gagliardo_h_half_norm(&t).unwrap();
        let b = gagliardo_h_half_norm(&t).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(a > 0.0);
    }

    #[test]
    fn boundary_mean_of_affine() {
        let g = Grid::new(2, 33).unwrap();
        // x has boundary mean 1/2 by symmetry
        let t = BoundaryTrace::from_fn(g, |x| x[0]);
        assert!((boundary_mean(&t) - 0.5).abs() < 1e-12);
    }
}
