//! Forward and inverse numerics for quantitative photoacoustic tomography on
//! tensor grids.
//!
//! The crate simulates internal absorbed-energy data `H_i = σ u_i` from two
//! boundary illuminations of the diffusion model `-div(D∇u) + σu = 0`,
//! reconstructs the coefficient pair `(D, σ)` through the ratio transform
//! `U = H₂/H₁` (which solves `div(a∇U) = 0` with `a = D u₁²`), and provides
//! computable diagnostics for the structural conditions that make the
//! reconstruction stable: unimodal boundary data, gradient vanishing rates,
//! boundary collar bounds, and empirical Hölder stability fits.
//!
//! Modules:
//! - [`grid`]: tensor grids, fields, traces, norms, discrete calculus, file I/O
//! - [`elliptic`]: divergence-form finite-difference assembly and CG solves
//! - [`forward`]: admissible phantoms, illuminations, data simulation, noise
//! - [`inverse`]: the ratio-transform reconstruction pipeline
//! - [`diagnostics`]: structural-condition reports and stability experiments

// stencil kernels index several parallel arrays by node and axis; explicit
// loops keep the strided arithmetic legible
#![allow(clippy::needless_range_loop)]

pub mod diagnostics;
pub mod elliptic;
mod error;
pub mod forward;
pub mod grid;
pub mod inverse;

pub use error::{Error, Result};
