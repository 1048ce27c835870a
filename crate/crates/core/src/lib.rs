//! Multiplicity-weighted sampling and interpolation in weighted Fock spaces.
//!
//! The crate evaluates the iterated weighted derivative
//! `∂̄*_φ f = -e^{φ} ∂(e^{-φ} f)` exactly through Bell-polynomial calculus,
//! measures weighted Beurling densities of point sets with multiplicities,
//! builds local interpolants from Riesz decompositions of the weight, and
//! estimates sampling bounds by finite sections over polynomial subspaces.
//!
//! Module map:
//!
//! - [`bell`]: partial/complete exponential Bell polynomials.
//! - [`weights`]: weight models with closed-form derivatives and mollification.
//! - [`geometry`]: point sets with multiplicities, separation, density profiles.
//! - [`potential`]: logarithmic potentials and disk Riesz decompositions.
//! - [`operator`]: entire test functions and pointwise `∂̄*` evaluation.
//! - [`interp`]: local interpolants and a least-squares global interpolation solver.
//! - [`sampling`]: evaluation/Gram matrices, frame bounds and the lattice phase scan.
//! - [`transform`]: multiplicity reduction by satellite points.
//! - [`io`]: CSV formats for point sets and interpolation data.

pub mod bell;
pub mod error;
pub mod geometry;
pub mod interp;
pub mod io;
pub mod operator;
pub mod potential;
pub mod quad;
pub mod sampling;
pub mod series;
pub mod transform;
pub mod weights;

pub use error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
